// Experiment runner: random problems, seeded trials, reports and grids.
#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lqgan/analysis.hpp"
#include "lqgan/dynamics.hpp"
#include "lqgan/random.hpp"

namespace lqgan {

inline Mat random_spd(int dim, std::uint64_t seed) {
    if (dim < 1) throw InvalidArgument("dim must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Mat m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = normal(rng);
    Mat s = m * m.transpose() + 0.1 * Mat::Identity(dim, dim);
    return 0.5 * (s + s.transpose());
}

// Random Sigma as above with a standard normal mean.
inline DataMoments random_moments(int dim, std::uint64_t seed) {
    Mat s = random_spd(dim, seed);
    std::mt19937_64 rng(mix_seed(seed, {0x5eed}));
    std::normal_distribution<double> normal;
    Vec mu(dim);
    for (int i = 0; i < dim; ++i) mu(i) = normal(rng);
    return DataMoments::make(mu, s);
}

inline GanState random_init(int dim, std::uint64_t seed) {
    if (dim < 1) throw InvalidArgument("dim must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    GanState s = GanState::zeros(dim);
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) s.w2(i, j) = s.w2(j, i) = normal(rng);
    for (int i = 0; i < dim; ++i) s.w1(i) = normal(rng);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j <= i; ++j) s.a(i, j) = i == j ? std::abs(normal(rng)) + 0.1 : normal(rng);
    for (int i = 0; i < dim; ++i) s.b(i) = normal(rng);
    return s;
}

// One column of a table: a map on a subsystem kind, optionally with its own
// solver (the fixed-step extragradient column runs plain F).
struct MapEntry {
    std::string label;
    MapId id = MapId::F;
    std::string subsystem = "W2A";
    Params params;
    std::optional<Solver> solver;
};

struct ExperimentConfig {
    std::vector<int> dims{1};
    std::vector<MapEntry> maps;
    int n_sigma = 10;
    int n_init = 10;
    double threshold = 1e-3;
    long max_iter = 100000;
    std::uint64_t master_seed = 0;
    Solver solver = OdeSolver{};
    int workers = 1;

    void validate() const {
        if (n_sigma * n_init < 1 || n_sigma < 0 || n_init < 0) throw InvalidArgument("need n_sigma * n_init >= 1");
        if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidArgument("threshold must lie in (0, 1)");
        if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
        for (int d : dims)
            if (d < 1) throw InvalidArgument("dims must be >= 1");
    }
};

// The 1-d row of the ODE experiment: F, fixed-step extragradient on F, F_con,
// F_reg, F_eg and F_cc on (W2, A).
inline std::vector<MapEntry> table3_maps() {
    return {{"F", MapId::F, "W2A", {}, std::nullopt},
            {"EG", MapId::F, "W2A", {}, Solver{ExtragradientSolver{}}},
            {"F_con", MapId::F_CON, "W2A", {}, std::nullopt},
            {"F_reg", MapId::F_REG, "W2A", {}, std::nullopt},
            {"F_eg", MapId::F_EG, "W2A", {}, std::nullopt},
            {"F_cc", MapId::F_CC, "W2A", {}, std::nullopt}};
}

// Defaults for the 1-d ODE row. rtol 1e-4 instead of the controller's 1e-6:
// the looser tolerance brings accepted-step counts to the scale of the table.
inline ExperimentConfig table3_config(std::uint64_t seed = 0) {
    ExperimentConfig c;
    c.maps = table3_maps();
    c.master_seed = seed;
    OdeSolver o;
    o.ctrl.rtol = 1e-4;
    c.solver = o;
    return c;
}

// Rescaled maps on (w2, a) with a fixed step of 0.1, at unit curl weight.
inline ExperimentConfig rescaled_config(std::uint64_t seed = 0) {
    ExperimentConfig c;
    Params cc, eg;
    cc.beta = 1.0;
    eg.gamma = 2.0;
    c.maps = {{"F_cc'", MapId::F_CC_PRIME, "W2A", cc, std::nullopt},
              {"F_eg'", MapId::F_EG_PRIME, "W2A", eg, std::nullopt}};
    c.master_seed = seed;
    c.solver = ProjectedSolver{0.1, 1e-3};
    return c;
}

struct TrialResult {
    long steps = 0;
    long attempted = 0;
    bool converged = false;
    std::string reason;
};

struct TrialRow {
    int dim;
    std::string map;
    int sigma_id;
    int init_id;
    TrialResult result;
};

struct Cell {
    int dim;
    std::string map;
    double mean_steps;
    double success_fraction;
    long trials;
};

struct TrialReport {
    std::vector<Cell> cells;
    std::vector<TrialRow> trials;

    const Cell* find(int dim, const std::string& map) const {
        for (const Cell& c : cells)
            if (c.dim == dim && c.map == map) return &c;
        return nullptr;
    }
};

inline TrialResult run_trial(const MapSpec& spec, const DataMoments& m, const GanState& x0, const Solver& solver,
                             double threshold, long max_iter) {
    StopRule stop;
    stop.ratio_threshold = threshold;
    stop.max_steps = max_iter;
    stop.keep_records = false;
    TrialResult r;
    try {
        const Trajectory tr = solve(spec, x0, m, solver, stop);
        r.converged = tr.terminal == Terminal::Converged;
        r.steps = r.converged ? tr.steps : max_iter;
        r.attempted = tr.attempted;
        r.reason = to_string(tr.terminal);
    } catch (const Error& e) {
        r.converged = false;
        r.steps = max_iter;
        r.reason = e.what();
    }
    return r;
}

inline std::uint64_t sigma_seed(std::uint64_t master, int dim, int sigma_id) {
    return mix_seed(master, {0x51, static_cast<std::uint64_t>(dim), static_cast<std::uint64_t>(sigma_id)});
}

inline std::uint64_t init_seed(std::uint64_t master, int dim, int sigma_id, int init_id) {
    return mix_seed(master, {0x1a, static_cast<std::uint64_t>(dim), static_cast<std::uint64_t>(sigma_id),
                             static_cast<std::uint64_t>(init_id)});
}

inline std::uint64_t trial_seed(std::uint64_t master, int dim, const std::string& map, int sigma_id, int init_id) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : map) h = (h ^ c) * 0x100000001b3ULL;
    return mix_seed(master, {static_cast<std::uint64_t>(dim), h, static_cast<std::uint64_t>(sigma_id),
                             static_cast<std::uint64_t>(init_id)});
}

// Sigma and x0 depend on (master, dim, sigma_id[, init_id]) only, so every map
// of a row sees the same problems and starts.
inline TrialReport run_table(const ExperimentConfig& cfg) {
    cfg.validate();
    TrialReport rep;
    struct Task {
        int dim, map, sigma_id, init_id;
    };
    std::vector<Task> tasks;
    for (int dim : cfg.dims)
        for (int k = 0; k < static_cast<int>(cfg.maps.size()); ++k)
            for (int s = 0; s < cfg.n_sigma; ++s)
                for (int i = 0; i < cfg.n_init; ++i) tasks.push_back({dim, k, s, i});
    std::vector<TrialResult> results(tasks.size());
    auto work = [&](std::size_t w, std::size_t stride) {
        for (std::size_t t = w; t < tasks.size(); t += stride) {
            const Task& task = tasks[t];
            const MapEntry& e = cfg.maps[task.map];
            const DataMoments m = random_moments(task.dim, sigma_seed(cfg.master_seed, task.dim, task.sigma_id));
            const GanState x0 =
                random_init(task.dim, init_seed(cfg.master_seed, task.dim, task.sigma_id, task.init_id));
            try {
                const MapSpec spec = MapSpec::make(e.id, parse_view(e.subsystem, task.dim), e.params);
                results[t] = run_trial(spec, m, x0, e.solver.value_or(cfg.solver), cfg.threshold, cfg.max_iter);
            } catch (const Error& err) {
                results[t] = TrialResult{cfg.max_iter, 0, false, err.what()};
            }
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(cfg.workers, tasks.size()));
    if (workers <= 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
        for (auto& t : pool) t.join();
    }
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const Task& task = tasks[t];
        const std::string label = cfg.maps[task.map].label.empty() ? to_string(cfg.maps[task.map].id)
                                                                    : cfg.maps[task.map].label;
        rep.trials.push_back({task.dim, label, task.sigma_id, task.init_id, results[t]});
    }
    for (int dim : cfg.dims)
        for (const MapEntry& e : cfg.maps) {
            const std::string label = e.label.empty() ? to_string(e.id) : e.label;
            double sum = 0.0;
            long n = 0, ok = 0;
            for (const TrialRow& r : rep.trials)
                if (r.dim == dim && r.map == label) {
                    sum += static_cast<double>(std::min(r.result.steps, cfg.max_iter));
                    ok += r.result.converged ? 1 : 0;
                    ++n;
                }
            if (n > 0) rep.cells.push_back({dim, label, sum / n, static_cast<double>(ok) / n, n});
        }
    return rep;
}

namespace detail {
inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace detail

inline void write_report_csv(const TrialReport& rep, std::ostream& os) {
    os << "row,dim,map,sigma_id,init_id,steps,attempted,converged,mean_steps,success_fraction,reason\n";
    for (const Cell& c : rep.cells)
        os << "cell," << c.dim << ',' << c.map << ",,,,,," << detail::num(c.mean_steps) << ','
           << detail::num(c.success_fraction) << ",\n";
    for (const TrialRow& r : rep.trials)
        os << "trial," << r.dim << ',' << r.map << ',' << r.sigma_id << ',' << r.init_id << ',' << r.result.steps
           << ',' << r.result.attempted << ',' << (r.result.converged ? 1 : 0) << ",,," << r.result.reason << '\n';
}

// Samples a 2-d view on a resolution x resolution grid covering the box
// inclusively. Rows: x1, x2, F1, F2.
inline void field_grid(const MapSpec& spec, const GanState& base, const DataMoments& m, const RegionBox& box,
                       int resolution, std::ostream& os) {
    if (spec.view.size() != 2) throw UnsupportedSubsystem("field grids need a 2-d view, got " + spec.view.name());
    if (resolution < 2) throw InvalidArgument("resolution must be >= 2");
    box.validate();
    os << "x1,x2,F1,F2\n";
    auto lo = [&](int k) { return box.positive[k] ? std::max(box.lower(k), box.eps) : box.lower(k); };
    for (int i = 0; i < resolution; ++i)
        for (int j = 0; j < resolution; ++j) {
            Vec x(2);
            x(0) = lo(0) + (box.upper(0) - lo(0)) * i / (resolution - 1);
            x(1) = lo(1) + (box.upper(1) - lo(1)) * j / (resolution - 1);
            const Vec f = evaluate_sub(spec, base, x, m, false).value;
            os << detail::num(x(0)) << ',' << detail::num(x(1)) << ',' << detail::num(f(0)) << ','
               << detail::num(f(1)) << '\n';
        }
}

inline void write_trajectory_csv(const Trajectory& tr, std::ostream& os) {
    os << "k,t";
    const int n = tr.records.empty() ? 0 : static_cast<int>(tr.records.front().x.size());
    for (int i = 0; i < n; ++i) os << ",x" << i;
    os << ",h,err\n";
    for (const Record& r : tr.records) {
        os << r.k << ',' << detail::num(r.t);
        for (int i = 0; i < n; ++i) os << ',' << detail::num(r.x(i));
        os << ',' << detail::num(r.h) << ',' << detail::num(r.err) << '\n';
    }
}

}  // namespace lqgan
