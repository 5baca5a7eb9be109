// Acceptance run: one PASS/FAIL line per criterion, plus indented detail.
// Exit status is the number of failed criteria not listed as known.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "lqgan/lqgan.hpp"

using namespace lqgan;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;
std::vector<std::string> known;  // criteria expected to fail, from --known-failure

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void verdict(const std::string& id, bool ok, const std::string& what, double secs, double budget) {
    const bool pass = ok && secs <= budget;
    const bool expected = std::find(known.begin(), known.end(), id) != known.end();
    if (!pass && !expected) ++failures;
    std::printf("%s criterion %s: %s [%.1fs / %.0fs]%s\n", pass ? "PASS" : "FAIL", id.c_str(), what.c_str(), secs,
                budget, !pass && expected ? " (known failure)" : "");
    std::fflush(stdout);
}

void detail_line(const char* fmt, double a = 0, double b = 0, double c = 0) {
    std::printf("    ");
    std::printf(fmt, a, b, c);
    std::printf("\n");
}

void fixtures() {
    const auto t0 = Clock::now();
    const auto results = run_fixtures(fixture_suite());
    int verified = 0, passed = 0, flagged = 0;
    for (const FixtureOutcome& r : results) {
        if (!r.verified) {
            ++flagged;
            std::printf("    flagged %s: published %.6g, observed %.6g\n", r.name.c_str(), r.expected, r.observed);
            continue;
        }
        ++verified;
        if (r.passed) ++passed;
        else std::printf("    miss %s: expected %.10g, observed %.10g\n", r.name.c_str(), r.expected, r.observed);
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "fixtures %d/%d within 1e-6 rel / 1e-9 abs (%d flagged, not asserted)", passed,
                  verified, flagged);
    verdict("1", passed == verified, buf, seconds_since(t0), 5);
}

void table3() {
    const auto t0 = Clock::now();
    const TrialReport r = run_table(table3_config(0));
    for (const Cell& c : r.cells) std::printf("    %-6s mean %.1f success %.2f\n", c.map.c_str(), c.mean_steps, c.success_fraction);
    auto cell = [&](const char* m) { return *r.find(1, m); };
    const double cc = cell("F_cc").mean_steps, eg = cell("F_eg").mean_steps;
    const double reg = cell("F_reg").mean_steps, con = cell("F_con").mean_steps;
    const bool success = cell("F_cc").success_fraction == 1.0 && cell("F_eg").success_fraction == 1.0 &&
                         cell("F_reg").success_fraction == 1.0 && cell("F").success_fraction == 0.0;
    const double ratio = eg / cc;
    const bool order = ratio >= 0.5 && ratio <= 2.0 && std::max(cc, eg) < reg && reg < con;
    const bool scale = cc >= 110.0 / 4 && cc <= 110.0 * 4;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "1-d row: success cc/eg/reg=1 F=0 %s; eg/cc %.2f, cc<reg<con %s; F_cc %.1f in [27.5, 440] %s",
                  success ? "ok" : "no", ratio, order ? "ok" : "no", cc, scale ? "ok" : "no");
    verdict("2", success && order && scale, buf, seconds_since(t0), 300);
}

void rescaled() {
    const auto t0 = Clock::now();
    const TrialReport r = run_table(rescaled_config(0));
    bool ok = true;
    std::string what;
    for (const Cell& c : r.cells) {
        ok = ok && c.success_fraction == 1.0 && c.mean_steps >= 20 && c.mean_steps <= 60;
        char buf[96];
        std::snprintf(buf, sizeof buf, "%s%s %.1f steps (success %.2f)", what.empty() ? "" : ", ", c.map.c_str(),
                      c.mean_steps, c.success_fraction);
        what += buf;
    }
    const double secs = seconds_since(t0);
    // Same maps at the half-weight curl scale of the map table, for reference.
    ExperimentConfig half = rescaled_config(0);
    for (MapEntry& e : half.maps) e.params = {};
    for (const Cell& c : run_table(half).cells)
        std::printf("    table-scale %s: %.1f steps (success %.2f)\n", c.map.c_str(), c.mean_steps, c.success_fraction);
    verdict("3", ok, "fixed step 0.1, unit curl weight: " + what + "; need [20, 60]", secs, 30);
}

void stagewise() {
    const auto t0 = Clock::now();
    const int trials = 100;
    int det_ok = 0, sto_ok = 0, printed_ok = 0;
    StagewiseConfig cfg;  // K = 20000 per stage, 5 stages at N = 4
    for (int t = 0; t < trials; ++t) {
        const DataMoments m = random_moments(4, mix_seed(0, {0x5A, static_cast<std::uint64_t>(t)}));
        Sampler exact = Sampler::exact(m);
        det_ok += run_stagewise(exact, m, cfg).ratio < 1e-3;
        Sampler g = Sampler::gaussian(m, mix_seed(0, {0x5B, static_cast<std::uint64_t>(t)}));
        sto_ok += run_stagewise(g, m, cfg).ratio < 0.1;
    }
    const double secs = seconds_since(t0);
    StagewiseConfig printed = cfg;
    printed.divisor = Divisor::BMinusOne;
    for (int t = 0; t < trials; ++t) {
        const DataMoments m = random_moments(4, mix_seed(0, {0x5A, static_cast<std::uint64_t>(t)}));
        Sampler g = Sampler::gaussian(m, mix_seed(0, {0x5B, static_cast<std::uint64_t>(t)}));
        printed_ok += run_stagewise(g, m, printed).ratio < 0.1;
    }
    detail_line("stochastic with the printed 1/(B-1) estimator: %.2f below 0.1", printed_ok / double(trials));
    const double det = det_ok / double(trials), sto = sto_ok / double(trials);
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "4-d, %ld total iterations: deterministic %.2f below 1e-3 (need 0.8), stochastic B=2 %.2f below "
                  "0.1 (need 0.5)",
                  cfg.K * 5, det, sto);
    verdict("4", det >= 0.8 && sto >= 0.5, buf, secs, 900);
}

void properties() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(0);
    std::uniform_real_distribution<double> u(-3, 3), pos(0.1, 4);
    bool all = true;
    auto report = [&](const char* tag, bool ok, const std::string& what) {
        all = all && ok;
        std::printf("    (%s) %s %s\n", tag, ok ? "ok  " : "MISS", what.c_str());
    };

    {  // (a) potential gradient
        Params p;
        p.beta = 1.0;
        const MapSpec s = MapSpec::make(MapId::F_CC_PRIME, SubsystemView::w2a(1), p);
        double worst = 0;
        for (int i = 0; i < 1000; ++i) {
            const double w2 = u(rng), a = pos(rng), s2 = pos(rng), h = 1e-6;
            Vec g(2);
            g << (potential_cc_prime(w2 + h, a, s2) - potential_cc_prime(w2 - h, a, s2)) / (2 * h),
                (potential_cc_prime(w2, a + h, s2) - potential_cc_prime(w2, a - h, s2)) / (2 * h);
            const Vec f = eval_field(s, GanState::scalar(w2, 0, a, 0), DataMoments::scalar(0, s2));
            worst = std::max(worst, (g - f).norm() / (1 + f.norm()));
        }
        report("a", worst < 1e-5, "potential gradient vs unit-weight F_cc', worst rel " + sci(worst));
    }
    {  // (b) analytic vs finite-difference Jacobians
        double worst = 0;
        int combos = 0;
        for (const auto& [id, name] : map_names()) {
            std::vector<SubsystemView> views;
            if (id == MapId::F_CC_COVROW) views = {SubsystemView::cov_row(3, 3)};
            else if (id == MapId::F_ALT || id == MapId::F_UNR) views = {SubsystemView::w1b(1), SubsystemView::w2a(1)};
            else if (id == MapId::F_CC_PRIME || id == MapId::F_EG_PRIME) views = {SubsystemView::w2a(1)};
            else views = {SubsystemView::w1b(2), SubsystemView::w2a(2), SubsystemView::full(1)};
            for (const SubsystemView& v : views) {
                ++combos;
                const MapSpec s = MapSpec::make(id, v);
                for (int i = 0; i < 1000; ++i) {
                    const GanState x = random_init(v.n, rng());
                    const DataMoments m = random_moments(v.n, rng());
                    const Mat ja = jacobian(s, x, m).j;
                    const Mat jc = jacobian(s, x, m, Method::central()).j;
                    worst = std::max(worst, (ja - jc).norm() / (1 + ja.norm()));
                }
            }
        }
        report("b", worst < 1e-5,
               std::to_string(combos) + " map/view pairs x 1000 points, worst rel " + sci(worst));
    }
    {  // (c) (w1, b) equivalence
        double worst = 0;
        for (int i = 0; i < 1000; ++i) {
            const DataMoments m = DataMoments::scalar(u(rng), 1);
            const GanState x = GanState::scalar(u(rng), u(rng), 1, u(rng));
            const Vec cc = eval_field(MapSpec::make(MapId::F_CC, SubsystemView::w1b(1)), x, m);
            const Vec eg = eval_field(MapSpec::make(MapId::F_EG, SubsystemView::w1b(1)), x, m);
            const Vec con = eval_field(MapSpec::make(MapId::F_CON, SubsystemView::w1b(1)), x, m);
            worst = std::max({worst, (cc - eg).norm(), (cc - con).norm()});
        }
        report("c", worst <= 1e-12, "F_cc = F_eg = F_con on (w1, b), worst " + sci(worst));
    }
    {  // (d) condition (A) for the rescaled maps
        const DataMoments m = DataMoments::scalar(0.3, 1.5);
        Vec lo(2), hi(2);
        lo << -5, 0;
        hi << 5, 5;
        const RegionBox box = RegionBox::for_view(SubsystemView::w2a(1), lo, hi, 1e-2);
        bool ok = true;
        std::string what;
        for (MapId id : {MapId::F_CC_PRIME, MapId::F_EG_PRIME}) {
            const CertReport r =
                condition_a_probe(MapSpec::make(id, SubsystemView::w2a(1)), equilibrium(m), m, box, 10000, 0, 4);
            ok = ok && r.grade != Grade::Violated;
            what += (what.empty() ? "" : ", ") + to_string(id) + " min " + sci(r.min_value);
        }
        report("d", ok, "condition (A) over a in [0.01, 5], 10^4 points: " + what);
    }
    {  // (e) psd grade of F_lin on (w1, b)
        bool ok = true;
        for (int i = 0; i < 1000; ++i) {
            Params p;
            p.alpha = u(rng);
            p.beta = pos(rng);
            p.gamma = pos(rng);
            const Mat j = jacobian(MapSpec::make(MapId::F_LIN, SubsystemView::w1b(1), p),
                                   GanState::scalar(0, u(rng), 1, u(rng)), DataMoments::scalar(u(rng), 1))
                              .j;
            ok = ok && psd_grade(j) == *p.beta + *p.gamma;
        }
        report("e", ok, "psd_grade(F_lin on (w1, b)) == beta + gamma exactly");
    }
    {  // (f) Cholesky round trip
        double worst = 0;
        for (int i = 0; i < 1000; ++i) {
            const Mat s = random_spd(1 + static_cast<int>(rng() % 6), rng());
            const Mat l = cholesky(s);
            worst = std::max(worst, (l * l.transpose() - s).norm() / s.norm());
        }
        report("f", worst < 1e-10, "Cholesky round trip, worst rel " + sci(worst));
    }
    {  // (g) Hoeffding value and monotonicity
        const long k = hoeffding_iterations(-1, 1, 0, 0.5, 0.5, 0.05);
        const long base = hoeffding_iterations(-1, 1, 0.2, 0.5, 0.5, 0.05);
        const bool mono = hoeffding_iterations(-1, 1, 0.4, 0.5, 0.5, 0.05) > base &&
                          hoeffding_iterations(-1, 2, 0.2, 0.5, 0.5, 0.05) > base &&
                          hoeffding_iterations(-1, 1, 0.2, 0.5, 0.7, 0.05) < base &&
                          hoeffding_iterations(-1, 1, 0.2, 0.7, 0.5, 0.05) < base &&
                          hoeffding_iterations(-1, 1, 0.2, 0.5, 0.5, 0.5) < base;
        report("g", k == 60 && mono, "Hoeffding example " + std::to_string(k) + ", monotone " + (mono ? "yes" : "no"));
    }
    verdict("5", all, "property suites (a)-(g)", seconds_since(t0), 120);
}

void heun_order() {
    const auto t0 = Clock::now();
    auto g = [](const Vec& y) -> Vec { return -y; };
    const Vec x = Vec::Ones(1);
    std::vector<double> lh, le;
    for (double h = 1e-1; h >= 1e-3 * 0.999; h /= std::sqrt(10.0)) {
        const HeunStep st = heun_euler_step(g, x, g(x), h);
        lh.push_back(std::log(h));
        le.push_back(std::log(std::abs(st.heun(0) - std::exp(-h))));
    }
    const double n = static_cast<double>(lh.size());
    double mx = 0, my = 0, sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lh.size(); ++i) mx += lh[i] / n, my += le[i] / n;
    for (std::size_t i = 0; i < lh.size(); ++i) sxy += (lh[i] - mx) * (le[i] - my), sxx += (lh[i] - mx) * (lh[i] - mx);
    const double slope = sxy / sxx;
    char buf[96];
    std::snprintf(buf, sizeof buf, "local error slope %.3f on x' = -x (need 3 +- 0.2)", slope);
    verdict("6", std::abs(slope - 3.0) <= 0.2, buf, seconds_since(t0), 5);
}

}  // namespace

// --known-failure <id> keeps a documented failure from setting the exit
// status; its line still reads FAIL.
int main(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--known-failure") known.push_back(argv[++i]);
    fixtures();
    table3();
    rescaled();
    stagewise();
    properties();
    heun_order();
    std::printf("%d unexpected criterion failures\n", failures);
    return failures;
}
