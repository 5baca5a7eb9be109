// JSON and file I/O for moments, map specs, configs and reports.
#pragma once

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <string>

#include "lqgan/harness.hpp"
#include "lqgan/stagewise.hpp"

namespace lqgan {

using nlohmann::json;

inline json to_json(const Vec& v) {
    json j = json::array();
    for (int i = 0; i < v.size(); ++i) j.push_back(v(i));
    return j;
}

inline json to_json(const Mat& m) {
    json j = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (int k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
        j.push_back(r);
    }
    return j;
}

inline Vec vec_from_json(const json& j) {
    if (!j.is_array()) throw IoError("expected a numeric array");
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

inline Mat mat_from_json(const json& j) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) throw IoError("expected a nested numeric array");
    Mat m(j.size(), j[0].size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (j[i].size() != j[0].size()) throw IoError("ragged matrix");
        for (std::size_t k = 0; k < j[i].size(); ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed for " + path);
}

// {"mu": [...], "sigma": [[...]]}
inline DataMoments moments_from_json(const json& j) {
    try {
        return DataMoments::make(vec_from_json(j.at("mu")), mat_from_json(j.at("sigma")));
    } catch (const json::exception& e) {
        throw IoError(std::string("moments: ") + e.what());
    }
}

inline json moments_to_json(const DataMoments& m) { return {{"mu", to_json(m.mu)}, {"sigma", to_json(m.sigma)}}; }

inline json state_to_json(const GanState& x) {
    return {{"w2", to_json(x.w2)}, {"w1", to_json(x.w1)}, {"a", to_json(x.a)}, {"b", to_json(x.b)}};
}

inline GanState state_from_json(const json& j) {
    try {
        GanState x{mat_from_json(j.at("w2")), vec_from_json(j.at("w1")), mat_from_json(j.at("a")),
                   vec_from_json(j.at("b"))};
        const int n = x.dim();
        if (x.w2.rows() != n || x.w2.cols() != n || x.a.rows() != n || x.a.cols() != n || x.b.size() != n)
            throw IoError("state blocks disagree in dimension");
        return x;
    } catch (const json::exception& e) {
        throw IoError(std::string("state: ") + e.what());
    }
}

inline json params_to_json(const Params& p) {
    json j = json::object();
    if (p.alpha) j["alpha"] = *p.alpha;
    if (p.beta) j["beta"] = *p.beta;
    if (p.gamma) j["gamma"] = *p.gamma;
    if (p.eta) j["eta"] = *p.eta;
    if (p.rho_k) j["rho_k"] = *p.rho_k;
    if (p.delta_k) j["delta_k"] = *p.delta_k;
    return j;
}

inline Params params_from_json(const json& j) {
    Params p;
    if (j.is_null()) return p;
    if (!j.is_object()) throw IoError("params must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k == "alpha") p.alpha = it->get<double>();
        else if (k == "beta") p.beta = it->get<double>();
        else if (k == "gamma") p.gamma = it->get<double>();
        else if (k == "eta") p.eta = it->get<double>();
        else if (k == "rho_k") p.rho_k = it->get<double>();
        else if (k == "delta_k") p.delta_k = it->get<int>();
        else throw IoError("unknown parameter '" + k + "'");
    }
    return p;
}

// {"id": "F_CC", "subsystem": "W2A", "dim": 1, "params": {...}}
inline json mapspec_to_json(const MapSpec& s) {
    return {{"id", to_string(s.id)}, {"subsystem", s.view.name()}, {"dim", s.view.n},
            {"params", params_to_json(s.params)}};
}

inline MapSpec mapspec_from_json(const json& j, int default_dim = 1) {
    try {
        const int dim = j.value("dim", default_dim);
        return MapSpec::make(parse_map_id(j.at("id").get<std::string>()),
                             parse_view(j.at("subsystem").get<std::string>(), dim),
                             params_from_json(j.value("params", json::object())));
    } catch (const json::exception& e) {
        throw IoError(std::string("map spec: ") + e.what());
    }
}

inline json controller_to_json(const StepController& c) {
    return {{"rtol", c.rtol},     {"atol", c.atol},         {"h0", c.h0},
            {"h_min", c.h_min},   {"h_max", c.h_max},       {"safety", c.safety},
            {"grow_max", c.grow_max}, {"shrink_min", c.shrink_min}};
}

inline StepController controller_from_json(const json& j, StepController c = {}) {
    c.rtol = j.value("rtol", c.rtol);
    c.atol = j.value("atol", c.atol);
    c.h0 = j.value("h0", c.h0);
    c.h_min = j.value("h_min", c.h_min);
    c.h_max = j.value("h_max", c.h_max);
    c.safety = j.value("safety", c.safety);
    c.grow_max = j.value("grow_max", c.grow_max);
    c.shrink_min = j.value("shrink_min", c.shrink_min);
    c.validate();
    return c;
}

inline json solver_to_json(const Solver& s) {
    if (const auto* o = std::get_if<OdeSolver>(&s)) return {{"kind", "ode"}, {"ctrl", controller_to_json(o->ctrl)}};
    if (const auto* e = std::get_if<ExtragradientSolver>(&s))
        return {{"kind", "extragradient"}, {"eta", e->eta}, {"rho", e->rho}};
    const auto& p = std::get<ProjectedSolver>(s);
    return {{"kind", "projected"}, {"rho", p.rho}, {"sigma_min", p.sigma_min}};
}

inline Solver solver_from_json(const json& j, const StepController& base_ctrl = {}) {
    const std::string kind = j.value("kind", "ode");
    if (kind == "ode") return OdeSolver{controller_from_json(j.value("ctrl", json::object()), base_ctrl)};
    if (kind == "extragradient") {
        ExtragradientSolver e;
        e.eta = j.value("eta", e.eta);
        e.rho = j.value("rho", e.rho);
        return e;
    }
    if (kind == "projected") {
        ProjectedSolver p;
        p.rho = j.value("rho", p.rho);
        p.sigma_min = j.value("sigma_min", p.sigma_min);
        return p;
    }
    throw IoError("unknown solver kind '" + kind + "'");
}

inline json config_to_json(const ExperimentConfig& c) {
    json maps = json::array();
    for (const MapEntry& e : c.maps) {
        json m = {{"label", e.label}, {"id", to_string(e.id)}, {"subsystem", e.subsystem},
                  {"params", params_to_json(e.params)}};
        if (e.solver) m["solver"] = solver_to_json(*e.solver);
        maps.push_back(m);
    }
    return {{"dims", c.dims},       {"maps", maps},         {"n_sigma", c.n_sigma},
            {"n_init", c.n_init},   {"threshold", c.threshold}, {"max_iter", c.max_iter},
            {"master_seed", c.master_seed}, {"solver", solver_to_json(c.solver)}, {"workers", c.workers}};
}

inline ExperimentConfig config_from_json(const json& j, ExperimentConfig c = {}) {
    try {
        if (j.contains("dims")) c.dims = j.at("dims").get<std::vector<int>>();
        if (j.contains("maps")) {
            c.maps.clear();
            for (const json& m : j.at("maps")) {
                MapEntry e;
                e.id = parse_map_id(m.at("id").get<std::string>());
                e.label = m.value("label", to_string(e.id));
                e.subsystem = m.value("subsystem", "W2A");
                e.params = params_from_json(m.value("params", json::object()));
                if (m.contains("solver")) e.solver = solver_from_json(m.at("solver"));
                c.maps.push_back(e);
            }
        }
        c.n_sigma = j.value("n_sigma", c.n_sigma);
        c.n_init = j.value("n_init", c.n_init);
        c.threshold = j.value("threshold", c.threshold);
        c.max_iter = j.value("max_iter", c.max_iter);
        c.master_seed = j.value("master_seed", c.master_seed);
        c.workers = j.value("workers", c.workers);
        if (j.contains("solver")) c.solver = solver_from_json(j.at("solver"));
    } catch (const json::exception& e) {
        throw IoError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline json report_to_json(const TrialReport& r) {
    json cells = json::array(), trials = json::array();
    for (const Cell& c : r.cells)
        cells.push_back({{"dim", c.dim}, {"map", c.map}, {"mean_steps", c.mean_steps},
                         {"success_fraction", c.success_fraction}, {"trials", c.trials}});
    for (const TrialRow& t : r.trials)
        trials.push_back({{"dim", t.dim}, {"map", t.map}, {"sigma_id", t.sigma_id}, {"init_id", t.init_id},
                          {"steps", t.result.steps}, {"attempted", t.result.attempted},
                          {"converged", t.result.converged}, {"reason", t.result.reason}});
    return {{"cells", cells}, {"trials", trials}};
}

enum class Format { Csv, Json };

inline Format parse_format(const std::string& s) {
    if (s == "csv") return Format::Csv;
    if (s == "json") return Format::Json;
    throw InvalidArgument("format must be csv or json");
}

inline std::string render_report(const TrialReport& r, Format f) {
    if (f == Format::Json) return report_to_json(r).dump(2) + "\n";
    std::ostringstream os;
    write_report_csv(r, os);
    return os.str();
}

inline void export_report(const TrialReport& r, const std::string& path, Format f) {
    write_text_file(path, render_report(r, f));
}

inline json cert_to_json(const CertReport& c) {
    json j = {{"grade", to_string(c.grade)}, {"samples", c.samples}, {"skipped", c.skipped},
              {"tolerance", c.tolerance}, {"min_value", c.min_value}};
    if (c.witness) {
        json pts = json::array();
        for (const Vec& p : c.witness->points) pts.push_back(to_json(p));
        j["witness"] = {{"points", pts}, {"direction", to_json(c.witness->direction)}, {"value", c.witness->value}};
    }
    return j;
}

inline json stagewise_to_json(const StagewiseResult& r) {
    return {{"mu_K", to_json(r.mu_K)}, {"sigma_K", to_json(r.sigma_K)}, {"A_K", to_json(r.A_K)},
            {"ratio", r.ratio},        {"stage_ratios", r.stage_ratios}, {"iterations", r.iterations}};
}

}  // namespace lqgan
