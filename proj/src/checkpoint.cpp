#include "bernflow/flow.hpp"

#include <fstream>
#include <iomanip>

namespace bernflow {

nlohmann::json to_json(const FlowModel& model) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : model.layers) {
        nlohmann::json range = nlohmann::json::array();
        for (const auto& r : layer.out_range) range.push_back({r.lo, r.hi});
        nlohmann::json dims = nlohmann::json::array();
        for (const auto& c : layer.couplings) {
            if (c.is_free()) dims.push_back({{"free_raw", c.free_raw}});
            else dims.push_back({{"net", c.net->to_json()}});
        }
        layers.push_back({{"degree", layer.degree},
                          {"scheme", to_string(layer.scheme)},
                          {"reversed", layer.reversed},
                          {"out_range", range},
                          {"dims", dims}});
    }
    return {{"format", "bernflow-checkpoint"},
            {"version", 1},
            {"prior", to_json(model.prior)},
            {"diffeo", to_json(model.diffeo)},
            {"layers", layers}};
}

FlowModel flow_from_json(const nlohmann::json& j) {
    try {
        FlowModel model;
        model.prior = prior_from_json(j.at("prior"));
        model.diffeo = diffeo_from_json(j.at("diffeo"));
        for (const auto& lj : j.at("layers")) {
            FlowLayer layer;
            layer.degree = lj.at("degree").get<int>();
            layer.scheme = scheme_from_string(lj.value("scheme", std::string("cumulative-positive")));
            layer.reversed = lj.value("reversed", false);
            for (const auto& r : lj.at("out_range")) layer.out_range.emplace_back(r.at(0).get<double>(), r.at(1).get<double>());
            for (const auto& dj : lj.at("dims")) {
                Coupling c;
                if (dj.contains("net")) c.net = ConditionerNet::from_json(dj.at("net"));
                else c.free_raw = dj.at("free_raw").get<std::vector<double>>();
                layer.couplings.push_back(std::move(c));
            }
            model.layers.push_back(std::move(layer));
        }
        model.validate();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const FlowModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write checkpoint '" + path + "'");
    out << to_json(model).dump(1) << '\n';
}

FlowModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open checkpoint '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("malformed checkpoint '" + path + "': " + e.what());
    }
    return flow_from_json(j);
}

}  // namespace bernflow
