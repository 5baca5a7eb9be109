// Solvers for x' = -G(x): adaptive Heun-Euler integration, simultaneous
// gradient steps, extragradient and projected steps.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "lqgan/fields.hpp"

namespace lqgan {

struct StepController {
    double rtol = 1e-6;
    double atol = 1e-9;
    double h0 = 1e-3;
    double h_min = 1e-12;
    double h_max = 1e3;
    double safety = 0.9;
    double grow_max = 5.0;
    double shrink_min = 0.2;

    void validate() const {
        if (!(0.0 < h_min && h_min <= h0 && h0 <= h_max)) throw InvalidArgument("need 0 < h_min <= h0 <= h_max");
        if (!(0.0 < safety && safety < 1.0)) throw InvalidArgument("need 0 < safety < 1");
        if (!(0.0 < shrink_min && shrink_min < 1.0 && 1.0 < grow_max))
            throw InvalidArgument("need 0 < shrink_min < 1 < grow_max");
        if (!(rtol >= 0.0 && atol >= 0.0 && rtol + atol > 0.0)) throw InvalidArgument("bad tolerances");
    }
};

struct Record {
    long k;
    double t;
    Vec x;
    double h;
    double err;
};

enum class Terminal { Converged, MaxSteps, Diverged, DomainExit };

inline std::string to_string(Terminal t) {
    switch (t) {
        case Terminal::Converged: return "Converged";
        case Terminal::MaxSteps: return "MaxSteps";
        case Terminal::Diverged: return "Diverged";
        case Terminal::DomainExit: return "DomainExit";
    }
    return "?";
}

struct Trajectory {
    std::vector<Record> records;
    Terminal terminal = Terminal::MaxSteps;
    long steps = 0;      // accepted steps
    long attempted = 0;  // accepted + rejected
    double ratio = 1.0;  // final distance ratio
};

struct StopRule {
    double ratio_threshold = 1e-3;
    long max_steps = 100000;
    double divergence_ratio = 1e6;
    bool keep_records = true;  // false keeps only the first and last record
};

namespace detail {

inline void push_record(Trajectory& tr, const StopRule& stop, Record r) {
    if (!stop.keep_records && tr.records.size() >= 2) tr.records.back() = std::move(r);
    else tr.records.push_back(std::move(r));
}

// Returns true when the trajectory reached a terminal state.
inline bool classify(Trajectory& tr, const Vec& x, const Vec& x0, const Vec& xs, const StopRule& stop) {
    const double r = (x - xs).norm() / (x0 - xs).norm();
    tr.ratio = r;
    if (!std::isfinite(r) || r > stop.divergence_ratio) {
        tr.terminal = Terminal::Diverged;
        return true;
    }
    if (r <= stop.ratio_threshold) {
        tr.terminal = Terminal::Converged;
        return true;
    }
    return false;
}

}  // namespace detail

// One Heun-Euler pair on x' = g(x) from x with k1 = g(x): returns the Euler
// predictor and the Heun corrector.
struct HeunStep {
    Vec euler, heun;
};

template <class G>
HeunStep heun_euler_step(G&& g, const Vec& x, const Vec& k1, double h) {
    HeunStep st;
    st.euler = x + h * k1;
    st.heun = x + 0.5 * h * (k1 + g(st.euler));
    return st;
}

inline Trajectory integrate_ode(const MapSpec& s, const GanState& x0_state, const DataMoments& m,
                                const StepController& ctrl, const StopRule& stop) {
    ctrl.validate();
    const Vec xs = s.view.gather(equilibrium(m));
    const Vec x0 = s.view.gather(x0_state);
    auto field = [&](const Vec& y) { return evaluate_sub(s, x0_state, y, m, false).value; };

    Trajectory tr;
    tr.records.push_back({0, 0.0, x0, 0.0, 0.0});
    if ((x0 - xs).norm() == 0.0) {
        tr.terminal = Terminal::Converged;
        tr.ratio = 0.0;
        return tr;
    }
    Vec x = x0;
    Vec k1 = -field(x);
    double t = 0.0, h = ctrl.h0;
    bool retried = false;
    while (tr.steps < stop.max_steps) {
        ++tr.attempted;
        Vec xe, xh, k1_next;
        try {
            const HeunStep st = heun_euler_step([&](const Vec& y) -> Vec { return -field(y); }, x, k1, h);
            xe = st.euler;
            xh = st.heun;
            k1_next = -field(xh);
        } catch (const DomainError&) {
            if (retried) {
                tr.terminal = Terminal::DomainExit;
                return tr;
            }
            retried = true;
            h = std::max(0.5 * h, ctrl.h_min);
            continue;
        }
        const double err = (xh - xe).norm();
        const double tol = ctrl.atol + ctrl.rtol * xh.norm();
        const bool accept = err <= tol || h <= ctrl.h_min;
        if (accept) {
            retried = false;
            x = xh;
            k1 = k1_next;
            t += h;
            ++tr.steps;
            detail::push_record(tr, stop, {tr.steps, t, x, h, err});
            if (detail::classify(tr, x, x0, xs, stop)) return tr;
        }
        double factor = err > 0.0 ? ctrl.safety * std::sqrt(tol / err) : ctrl.grow_max;
        if (!std::isfinite(factor)) factor = ctrl.shrink_min;
        factor = std::clamp(factor, ctrl.shrink_min, ctrl.grow_max);
        h = std::clamp(h * factor, ctrl.h_min, ctrl.h_max);
    }
    tr.terminal = Terminal::MaxSteps;
    return tr;
}

// ---------------------------------------------------------------------------
// Fixed-step updates on view coordinates

inline Vec step_sim_gd(const MapSpec& s, const GanState& base, const Vec& x, const DataMoments& m, double rho) {
    return x - rho * evaluate_sub(s, base, x, m, false).value;
}

inline GanState step_sim_gd(const MapSpec& s, const GanState& x, const DataMoments& m, double rho) {
    return s.view.with(x, step_sim_gd(s, x, s.view.gather(x), m, rho));
}

inline Vec step_extragradient(const MapSpec& s, const GanState& base, const Vec& x, const DataMoments& m,
                              double eta, double rho) {
    const Vec xhat = x - eta * evaluate_sub(s, base, x, m, false).value;
    try {
        return x - rho * evaluate_sub(s, base, xhat, m, false).value;
    } catch (const DomainError& e) {
        throw DomainExit(std::string("extragradient midpoint left the domain: ") + e.what());
    }
}

inline GanState step_extragradient(const MapSpec& s, const GanState& x, const DataMoments& m, double eta,
                                   double rho) {
    return s.view.with(x, step_extragradient(s, x, s.view.gather(x), m, eta, rho));
}

// Rescales an off-diagonal row r by sigma_d / sqrt(|r|^2 + sigma_min^2) when
// |r|^2 > sigma_d^2 - sigma_min^2. The result always has |r|^2 < sigma_d^2.
inline Vec ball_project(const Vec& row, double sigma_d, double sigma_min) {
    const double r2 = row.squaredNorm();
    if (r2 <= sigma_d * sigma_d - sigma_min * sigma_min) return row;
    return row * (sigma_d / std::sqrt(r2 + sigma_min * sigma_min));
}

struct Projection {
    enum Kind { None, ClipA, BallRow } kind = None;
    double sigma_min = 0.0;
    double sigma_d = 0.0;  // BallRow only

    static Projection none() { return {}; }
    static Projection clip_a(double sigma_min) { return {ClipA, sigma_min, 0.0}; }
    static Projection ball_row(double sigma_d, double sigma_min) { return {BallRow, sigma_min, sigma_d}; }
};

inline Vec project(const SubsystemView& v, const Vec& x, const Projection& p) {
    Vec out = x;
    if (p.kind == Projection::ClipA) {
        const Layout l{v.n};
        for (int k = 0; k < v.size(); ++k)
            for (int i = 0; i < v.n; ++i)
                if (v.coords[k] == l.a(i, i)) out(k) = std::max(out(k), p.sigma_min);
    } else if (p.kind == Projection::BallRow) {
        if (v.kind != Kind::COV_ROW) throw UnsupportedSubsystem("ball projection needs a COV_ROW view");
        out = ball_project(x, p.sigma_d, p.sigma_min);
    }
    return out;
}

inline Vec step_projected(const MapSpec& s, const GanState& base, const Vec& x, const DataMoments& m, double rho,
                          const Projection& p) {
    return project(s.view, x - rho * evaluate_sub(s, base, x, m, false).value, p);
}

inline GanState step_projected(const MapSpec& s, const GanState& x, const DataMoments& m, double rho,
                               const Projection& p) {
    return s.view.with(x, step_projected(s, x, s.view.gather(x), m, rho, p));
}

// ---------------------------------------------------------------------------
// Solver selection and fixed-step iteration

struct OdeSolver {
    StepController ctrl;
};
struct ExtragradientSolver {
    double eta = 1e-3;
    double rho = 1e-3;
};
struct ProjectedSolver {
    double rho = 0.1;
    double sigma_min = 1e-3;
};
using Solver = std::variant<OdeSolver, ExtragradientSolver, ProjectedSolver>;

inline std::string solver_name(const Solver& s) {
    if (std::holds_alternative<OdeSolver>(s)) return "ode";
    if (std::holds_alternative<ExtragradientSolver>(s)) return "extragradient";
    return "projected";
}

template <class Step>
Trajectory iterate_fixed(const MapSpec& s, const GanState& x0_state, const DataMoments& m, double h,
                         const StopRule& stop, Step step) {
    const Vec xs = s.view.gather(equilibrium(m));
    const Vec x0 = s.view.gather(x0_state);
    Trajectory tr;
    tr.records.push_back({0, 0.0, x0, 0.0, 0.0});
    if ((x0 - xs).norm() == 0.0) {
        tr.terminal = Terminal::Converged;
        tr.ratio = 0.0;
        return tr;
    }
    Vec x = x0;
    while (tr.steps < stop.max_steps) {
        ++tr.attempted;
        try {
            x = step(x);
        } catch (const DomainError&) {
            tr.terminal = Terminal::DomainExit;
            return tr;
        } catch (const DomainExit&) {
            tr.terminal = Terminal::DomainExit;
            return tr;
        }
        ++tr.steps;
        detail::push_record(tr, stop, {tr.steps, tr.steps * h, x, h, 0.0});
        if (detail::classify(tr, x, x0, xs, stop)) return tr;
    }
    tr.terminal = Terminal::MaxSteps;
    return tr;
}

inline Trajectory solve(const MapSpec& s, const GanState& x0, const DataMoments& m, const Solver& solver,
                        const StopRule& stop) {
    if (const auto* o = std::get_if<OdeSolver>(&solver)) return integrate_ode(s, x0, m, o->ctrl, stop);
    if (const auto* e = std::get_if<ExtragradientSolver>(&solver))
        return iterate_fixed(s, x0, m, e->rho, stop,
                             [&](const Vec& x) { return step_extragradient(s, x0, x, m, e->eta, e->rho); });
    const auto& p = std::get<ProjectedSolver>(solver);
    const Projection proj = Projection::clip_a(p.sigma_min);
    return iterate_fixed(s, x0, m, p.rho, stop,
                         [&](const Vec& x) { return step_projected(s, x0, x, m, p.rho, proj); });
}

}  // namespace lqgan
