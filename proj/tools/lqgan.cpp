// Command-line front end: fixture checks, single simulations, stagewise
// training, the ODE table, vector-field grids and sample-size bounds.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lqgan/lqgan.hpp"

using namespace lqgan;
using json = nlohmann::json;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    std::string config;
    std::string out;
    std::string format = "json";
};

void emit(const Globals& g, const std::string& text) {
    if (g.out.empty() || g.out == "-")
        std::cout << text;
    else
        write_text_file(g.out, text);
}

json config_json(const Globals& g) { return g.config.empty() ? json::object() : read_json_file(g.config); }

DataMoments load_moments(const std::string& path, int dim, std::uint64_t seed) {
    if (!path.empty()) return moments_from_json(read_json_file(path));
    return random_moments(dim, seed);
}

std::string render_json_or_csv(const Globals& g, const json& j, const std::function<std::string()>& csv) {
    return parse_format(g.format) == Format::Json ? j.dump(2) + "\n" : csv();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LQ-GAN map analysis and training"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "master seed");
    app.add_option("--config", g.config, "JSON configuration file");
    app.add_option("--out", g.out, "output path (stdout when omitted)");
    app.add_option("--format", g.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    // check -----------------------------------------------------------------
    auto* check = app.add_subcommand("check", "fixture suite or a certification probe");
    bool fixtures = false;
    std::string map_name = "F_CC", subsystem = "W2A", moments_path;
    int dim = 1;
    long points = 1000;
    std::vector<double> lower, upper;
    check->add_flag("--fixtures", fixtures, "run the counterexample fixture suite");
    check->add_option("--map", map_name);
    check->add_option("--subsystem", subsystem);
    check->add_option("--dim", dim);
    check->add_option("--moments", moments_path, "JSON with mu and sigma");
    check->add_option("--points", points);
    check->add_option("--lower", lower, "region lower corner");
    check->add_option("--upper", upper, "region upper corner");

    // simulate --------------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "integrate or iterate one map from one start");
    std::string solver_kind = "ode", x0_path;
    double rtol = 1e-6, atol = 1e-9, h0 = 1e-3, eta = 1e-3, rho = 0.1, threshold = 1e-3;
    long max_steps = 100000;
    sim->add_option("--map", map_name);
    sim->add_option("--subsystem", subsystem);
    sim->add_option("--dim", dim);
    sim->add_option("--moments", moments_path);
    sim->add_option("--x0", x0_path, "JSON state with w2, w1, a, b");
    sim->add_option("--solver", solver_kind)->check(CLI::IsMember({"ode", "extragradient", "projected"}));
    sim->add_option("--rtol", rtol);
    sim->add_option("--atol", atol);
    sim->add_option("--h0", h0);
    sim->add_option("--eta", eta);
    sim->add_option("--rho", rho);
    sim->add_option("--threshold", threshold);
    sim->add_option("--max-steps", max_steps);

    // stagewise -------------------------------------------------------------
    auto* stage = app.add_subcommand("stagewise", "mean, scale, then covariance rows");
    StagewiseConfig scfg;
    std::string sampler_kind = "exact", data_path, divisor = "batch";
    stage->add_option("--dim", dim);
    stage->add_option("--K", scfg.K, "iterations per stage");
    stage->add_option("--B", scfg.B, "batch size");
    stage->add_option("--sigma-min", scfg.sigma_min);
    stage->add_option("--sampler", sampler_kind)->check(CLI::IsMember({"exact", "gaussian", "file"}));
    stage->add_option("--data", data_path, "sample file for --sampler file");
    stage->add_option("--moments", moments_path);
    stage->add_option("--divisor", divisor)->check(CLI::IsMember({"batch", "batch-1"}));
    stage->add_option("--ongoing-mean-weight", scfg.ongoing_mean_weight);

    // table3 ----------------------------------------------------------------
    auto* table = app.add_subcommand("table3", "seeded trials of each map on (W2, A)");
    int n_sigma = -1, n_init = -1, workers = 1;
    bool rescaled = false;
    table->add_option("--n-sigma", n_sigma);
    table->add_option("--n-init", n_init);
    table->add_option("--workers", workers);
    table->add_flag("--rescaled", rescaled, "fixed-step rescaled maps instead of the ODE row");

    // field-grid ------------------------------------------------------------
    auto* grid = app.add_subcommand("field-grid", "sample a 2-d map on a regular grid");
    int resolution = 21;
    grid->add_option("--map", map_name);
    grid->add_option("--subsystem", subsystem);
    grid->add_option("--moments", moments_path);
    grid->add_option("--lower", lower)->expected(2);
    grid->add_option("--upper", upper)->expected(2);
    grid->add_option("--resolution", resolution);

    // hoeffding -------------------------------------------------------------
    auto* hoeff = app.add_subcommand("hoeffding", "iterations before the mean is accurate enough");
    double y_low = -1, y_hi = 1, mu = 0, sigma = 1, d = 0.5, delta = 0.05;
    bool chernoff = false;
    hoeff->add_option("--y-low", y_low);
    hoeff->add_option("--y-hi", y_hi);
    hoeff->add_option("--mu", mu);
    hoeff->add_option("--sigma", sigma);
    hoeff->add_option("--d", d);
    hoeff->add_option("--delta", delta);
    hoeff->add_flag("--chernoff", chernoff, "Gaussian tail bound instead");

    CLI11_PARSE(app, argc, argv);

    try {
        const json cfg = config_json(g);

        if (check->parsed()) {
            if (fixtures) {
                const auto results = run_fixtures(fixture_suite());
                bool ok = true;
                json j = json::array();
                std::ostringstream csv;
                csv << "name,inputs,expected,observed,verified,passed\n";
                for (const FixtureOutcome& r : results) {
                    ok = ok && (r.passed || !r.verified);
                    j.push_back({{"name", r.name}, {"inputs", r.inputs}, {"expected", r.expected},
                                 {"observed", r.observed}, {"verified", r.verified}, {"passed", r.passed}});
                    csv << r.name << ",\"" << r.inputs << "\"," << detail::num(r.expected) << ','
                        << detail::num(r.observed) << ',' << r.verified << ',' << r.passed << '\n';
                }
                emit(g, render_json_or_csv(g, j, [&] { return csv.str(); }));
                return ok ? 0 : 2;
            }
            const DataMoments m = load_moments(moments_path, dim, g.seed);
            const MapSpec s = MapSpec::make(parse_map_id(map_name), parse_view(subsystem, m.dim()));
            const int k = s.view.size();
            Vec lo = Vec::Constant(k, -2.0), hi = Vec::Constant(k, 2.0);
            if (!lower.empty()) lo = Eigen::Map<const Vec>(lower.data(), static_cast<long>(lower.size()));
            if (!upper.empty()) hi = Eigen::Map<const Vec>(upper.data(), static_cast<long>(upper.size()));
            const RegionBox box = RegionBox::for_view(s.view, lo, hi);
            const CertReport rep = certify(s, equilibrium(m), m, box, points, g.seed);
            emit(g, cert_to_json(rep).dump(2) + "\n");
            return 0;
        }

        if (sim->parsed()) {
            const DataMoments m = load_moments(moments_path, dim, g.seed);
            const MapSpec s = MapSpec::make(parse_map_id(map_name), parse_view(subsystem, m.dim()));
            const GanState x0 =
                x0_path.empty() ? random_init(m.dim(), mix_seed(g.seed, {1})) : state_from_json(read_json_file(x0_path));
            Solver solver;
            if (solver_kind == "ode") {
                OdeSolver o;
                o.ctrl.rtol = rtol;
                o.ctrl.atol = atol;
                o.ctrl.h0 = h0;
                solver = o;
            } else if (solver_kind == "extragradient") {
                solver = ExtragradientSolver{eta, rho};
            } else {
                solver = ProjectedSolver{rho, 1e-3};
            }
            if (cfg.contains("solver")) solver = solver_from_json(cfg.at("solver"));
            StopRule stop;
            stop.ratio_threshold = threshold;
            stop.max_steps = max_steps;
            const Trajectory tr = solve(s, x0, m, solver, stop);
            if (parse_format(g.format) == Format::Csv) {
                std::ostringstream os;
                write_trajectory_csv(tr, os);
                emit(g, os.str());
            } else {
                json j = {{"terminal", to_string(tr.terminal)}, {"steps", tr.steps}, {"attempted", tr.attempted},
                          {"ratio", tr.ratio}, {"x", to_json(tr.records.back().x)}};
                emit(g, j.dump(2) + "\n");
            }
            return 0;
        }

        if (stage->parsed()) {
            scfg.seed = g.seed;
            scfg.divisor = divisor == "batch" ? Divisor::Batch : Divisor::BMinusOne;
            if (cfg.contains("K")) scfg.K = cfg.at("K").get<long>();
            if (cfg.contains("B")) scfg.B = cfg.at("B").get<int>();
            const DataMoments m = load_moments(moments_path, dim, mix_seed(g.seed, {2}));
            Sampler sampler = sampler_kind == "exact"      ? Sampler::exact(m)
                              : sampler_kind == "gaussian" ? Sampler::gaussian(m, mix_seed(g.seed, {3}))
                                                           : Sampler::from_file(data_path, mix_seed(g.seed, {3}));
            const StagewiseResult r = run_stagewise(sampler, m, scfg);
            emit(g, stagewise_to_json(r).dump(2) + "\n");
            return 0;
        }

        if (table->parsed()) {
            ExperimentConfig c = rescaled ? rescaled_config(g.seed) : table3_config(g.seed);
            c = config_from_json(cfg, c);
            if (n_sigma >= 0) c.n_sigma = n_sigma;
            if (n_init >= 0) c.n_init = n_init;
            c.workers = workers;
            const TrialReport rep = run_table(c);
            emit(g, render_report(rep, parse_format(g.format)));
            return 0;
        }

        if (grid->parsed()) {
            const DataMoments m = load_moments(moments_path, 1, g.seed);
            const MapSpec s = MapSpec::make(parse_map_id(map_name), parse_view(subsystem, m.dim()));
            if (lower.size() != 2 || upper.size() != 2) throw InvalidArgument("--lower and --upper take two values");
            const RegionBox box = RegionBox::make(Eigen::Map<const Vec>(lower.data(), 2),
                                                  Eigen::Map<const Vec>(upper.data(), 2));
            std::ostringstream os;
            field_grid(s, equilibrium(m), m, box, resolution, os);
            emit(g, os.str());
            return 0;
        }

        if (hoeff->parsed()) {
            const long k = chernoff ? chernoff_iterations(mu, sigma, d, delta)
                                    : hoeffding_iterations(y_low, y_hi, mu, sigma, d, delta);
            emit(g, std::to_string(k) + "\n");
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
    return 0;
}
