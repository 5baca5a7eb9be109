// Vector-field maps over LQ-GAN subsystems, their Jacobians and the generic
// linear preconditioner (alpha I + beta J' - gamma J) F.
//
// Every map except the closed-form alternating/unrolled rows and the
// covariance-row map is built from the full field F, which is a polynomial of
// degree two in the flattened state. Its Jacobian is therefore affine and the
// second-order terms needed by preconditioned maps are exact differences of
// Jacobians (J(e_j) - J(0)), not finite-difference approximations.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lqgan/model.hpp"

namespace lqgan {

enum class MapId {
    F,
    F_ALT,
    F_UNR,
    F_REG,
    F_CON,
    F_EG,
    F_CC,
    F_ETA_CC,
    F_LIN,
    F_EG_PRIME,
    F_CC_PRIME,
    F_CC_COVROW
};

inline const std::vector<std::pair<MapId, const char*>>& map_names() {
    static const std::vector<std::pair<MapId, const char*>> names = {
        {MapId::F, "F"},
        {MapId::F_ALT, "F_ALT"},
        {MapId::F_UNR, "F_UNR"},
        {MapId::F_REG, "F_REG"},
        {MapId::F_CON, "F_CON"},
        {MapId::F_EG, "F_EG"},
        {MapId::F_CC, "F_CC"},
        {MapId::F_ETA_CC, "F_ETA_CC"},
        {MapId::F_LIN, "F_LIN"},
        {MapId::F_EG_PRIME, "F_EG_PRIME"},
        {MapId::F_CC_PRIME, "F_CC_PRIME"},
        {MapId::F_CC_COVROW, "F_CC_COVROW"}};
    return names;
}

inline std::string to_string(MapId id) {
    for (const auto& [k, v] : map_names())
        if (k == id) return v;
    return "?";
}

inline MapId parse_map_id(const std::string& s) {
    for (const auto& [k, v] : map_names())
        if (s == v) return k;
    throw InvalidArgument("unknown map id '" + s + "'");
}

// Hyperparameters as configured. Unset entries take per-map defaults (see
// resolve()); values a map does not consume are kept for reproducibility.
struct Params {
    std::optional<double> alpha, beta, gamma, eta, rho_k;
    std::optional<int> delta_k;
};

struct Resolved {
    double alpha, beta, gamma, eta, rho_k;
    int delta_k;
};

struct MapSpec {
    MapId id = MapId::F;
    SubsystemView view = SubsystemView::w1b(1);
    Params params;

    static MapSpec make(MapId id, SubsystemView view, Params p = {}) {
        return MapSpec{id, std::move(view), p};
    }
};

// Defaults reproduce the unit-coefficient rows of the map table: F_cc is
// (1/2)(J' - J)F, F_eg is -JF, F_con is J'F on (w1, b) and (I + J')F elsewhere.
inline Resolved resolve(const MapSpec& s) {
    const Params& p = s.params;
    Resolved r{};
    double alpha = 1.0, beta = 1.0, gamma = 1.0;
    switch (s.id) {
        case MapId::F_CC:
        case MapId::F_CC_PRIME: beta = 0.5; break;
        case MapId::F_CON: alpha = s.view.kind == Kind::W1B ? 0.0 : 1.0; break;
        default: break;
    }
    r.alpha = p.alpha.value_or(alpha);
    r.beta = p.beta.value_or(beta);
    r.gamma = p.gamma.value_or(gamma);
    r.eta = p.eta.value_or(1.0);
    r.rho_k = p.rho_k.value_or(0.1);
    r.delta_k = p.delta_k.value_or(1);
    if (r.delta_k < 1) throw InvalidArgument("delta_k must be a positive integer");
    return r;
}

// ---------------------------------------------------------------------------
// Full field on the flattened state

namespace detail {

inline Vec full_field(int n, const Vec& x, const DataMoments& m) {
    const Layout l{n};
    const GanState s = GanState::unflatten(n, x);
    Vec f(l.size());
    const Mat mm = s.a * s.a.transpose() + s.b * s.b.transpose() - m.sigma - m.mu * m.mu.transpose();
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) f(l.w2(i, j)) = (i == j ? 1.0 : 2.0) * mm(i, j);
    for (int i = 0; i < n; ++i) f(l.w1(i)) = s.b(i) - m.mu(i);
    const Mat wa = -2.0 * s.w2 * s.a;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) f(l.a(i, j)) = wa(i, j);
    const Vec fb = -2.0 * s.w2 * s.b - s.w1;
    for (int i = 0; i < n; ++i) f(l.b(i)) = fb(i);
    return f;
}

// Jacobian of full_field. With constant_part = false only the part linear in x
// is returned, so full_jacobian(e_j, false) is the derivative of J along e_j.
inline Mat full_jacobian(int n, const Vec& x, bool constant_part = true) {
    const Layout l{n};
    const GanState s = GanState::unflatten(n, x);
    Mat jm = Mat::Zero(l.size(), l.size());
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const int r = l.w2(i, j);
            const double c = i == j ? 1.0 : 2.0;
            for (int q = 0; q < n; ++q) {
                if (q <= i) jm(r, l.a(i, q)) += c * s.a(j, q);
                if (q <= j) jm(r, l.a(j, q)) += c * s.a(i, q);
            }
            jm(r, l.b(i)) += c * s.b(j);
            jm(r, l.b(j)) += c * s.b(i);
        }
    for (int i = 0; i < n; ++i)
        if (constant_part) jm(l.w1(i), l.b(i)) = 1.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            const int r = l.a(i, j);
            for (int k = 0; k < n; ++k) {
                jm(r, l.w2(i, k)) += -2.0 * s.a(k, j);
                if (k >= j) jm(r, l.a(k, j)) += -2.0 * s.w2(i, k);
            }
        }
    for (int i = 0; i < n; ++i) {
        const int r = l.b(i);
        for (int k = 0; k < n; ++k) {
            jm(r, l.w2(i, k)) += -2.0 * s.b(k);
            jm(r, l.b(k)) += -2.0 * s.w2(i, k);
        }
        if (constant_part) jm(r, l.w1(i)) = -1.0;
    }
    return jm;
}

inline bool is_discriminator_coord(int n, int c) { return c < Layout{n}.tri() + n; }

// Flattened state with the view's coordinates substituted and the frozen
// block imposed: W2 = 0 on (w1, b); w1 = 0, b = mu on (W2, A).
inline Vec embed(const SubsystemView& v, const Vec& base, const Vec& sub, const DataMoments& m) {
    Vec flat = base;
    v.scatter(flat, sub);
    const Layout l{v.n};
    if (v.kind == Kind::W1B) {
        for (int i = 0; i < l.tri(); ++i) flat(i) = 0.0;
    } else if (v.kind == Kind::W2A) {
        for (int i = 0; i < v.n; ++i) {
            flat(l.w1(i)) = 0.0;
            flat(l.b(i)) = m.mu(i);
        }
    }
    return flat;
}

inline Mat restrict(const Mat& full, const std::vector<int>& c) {
    const int k = static_cast<int>(c.size());
    Mat out(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) out(i, j) = full(c[i], c[j]);
    return out;
}

inline Vec restrict(const Vec& full, const std::vector<int>& c) {
    Vec out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out(i) = full(c[i]);
    return out;
}

// Base field restricted to the view, with value, Jacobian and the derivative
// slices dJ/dx_j (constant because the field is quadratic).
struct BaseEval {
    Vec f;
    Mat j;
    std::vector<Mat> dj;
};

inline BaseEval base_eval(const SubsystemView& v, const Vec& base, const Vec& sub, const DataMoments& m,
                          bool want_jac, bool want_dj) {
    const Vec flat = embed(v, base, sub, m);
    BaseEval e;
    e.f = restrict(full_field(v.n, flat, m), v.coords);
    if (want_jac || want_dj) e.j = restrict(full_jacobian(v.n, flat), v.coords);
    if (want_dj) {
        const int total = Layout{v.n}.size();
        for (int c : v.coords) {
            Vec dir = Vec::Zero(total);
            dir(c) = 1.0;
            e.dj.push_back(restrict(full_jacobian(v.n, dir, false), v.coords));
        }
    }
    return e;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Map evaluation

struct FieldEval {
    Vec value;
    Mat jac;
    bool analytic = true;  // false when jac came from central differences
};

namespace detail {

inline void require(bool ok, const MapSpec& s) {
    if (!ok)
        throw UnsupportedCombination(to_string(s.id) + " on " + s.view.name() + " (dim " +
                                     std::to_string(s.view.n) + ")");
}

inline bool is_full_w2a(const SubsystemView& v) {
    if (v.kind != Kind::W2A) return false;
    const SubsystemView ref = SubsystemView::w2a(v.n);
    return ref.coords == v.coords;
}

// Position of each view coordinate in the canonical W2A order; empty when
// the view is not a permutation of it.
inline std::vector<int> w2a_permutation(const SubsystemView& v) {
    if (v.kind != Kind::W2A) return {};
    const SubsystemView ref = SubsystemView::w2a(v.n);
    if (ref.coords.size() != v.coords.size()) return {};
    std::vector<int> perm;
    for (int c : v.coords) {
        auto it = std::find(ref.coords.begin(), ref.coords.end(), c);
        if (it == ref.coords.end()) return {};
        perm.push_back(static_cast<int>(it - ref.coords.begin()));
    }
    std::vector<int> seen(perm);
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) return {};
    return perm;
}

inline void require_positive_diagonal(const GanState& s) {
    for (int i = 0; i < s.dim(); ++i)
        if (!(s.a(i, i) > 0.0))
            throw DomainError("rescaled map needs a positive diagonal of A, got " +
                              std::to_string(s.a(i, i)));
}

// (alpha I + beta J' - gamma J) F of the base field, with its Jacobian.
inline FieldEval lin_of_base(const SubsystemView& v, const Vec& base, const Vec& sub, const DataMoments& m,
                             double alpha, double beta, double gamma, bool want_jac) {
    const bool second = want_jac && (beta != 0.0 || gamma != 0.0);
    const bool first = want_jac || beta != 0.0 || gamma != 0.0;
    BaseEval b = base_eval(v, base, sub, m, first, second);
    FieldEval out;
    out.value = alpha * b.f;
    if (beta != 0.0) out.value += beta * b.j.transpose() * b.f;
    if (gamma != 0.0) out.value -= gamma * b.j * b.f;
    if (!want_jac) return out;
    const int k = v.size();
    out.jac = alpha * b.j;
    if (second) {
        Mat t1(k, k), t2(k, k);
        for (int c = 0; c < k; ++c) {
            t1.col(c) = b.dj[c].transpose() * b.f;
            t2.col(c) = b.dj[c] * b.f;
        }
        if (beta != 0.0) out.jac += beta * (t1 + b.j.transpose() * b.j);
        if (gamma != 0.0) out.jac -= gamma * (t2 + b.j * b.j);
    }
    return out;
}

// F with the generator block shifted by eta * grad_G ||F_D||^2.
inline FieldEval reg_of_base(const SubsystemView& v, const Vec& base, const Vec& sub, const DataMoments& m,
                             double eta, bool want_jac) {
    BaseEval b = base_eval(v, base, sub, m, true, want_jac);
    const int k = v.size();
    Vec mask_d(k);
    for (int i = 0; i < k; ++i) mask_d(i) = is_discriminator_coord(v.n, v.coords[i]) ? 1.0 : 0.0;
    const Vec fd = b.f.cwiseProduct(mask_d);
    const Vec mask_g = Vec::Ones(k) - mask_d;
    FieldEval out;
    out.value = b.f + (2.0 * eta * (b.j.transpose() * fd)).cwiseProduct(mask_g);
    if (!want_jac) return out;
    Mat r(k, k);
    const Mat jd = mask_d.asDiagonal() * b.j;
    for (int c = 0; c < k; ++c) r.col(c) = b.dj[c].transpose() * fd;
    r += jd.transpose() * b.j;
    out.jac = b.j + mask_g.asDiagonal() * (2.0 * eta * r);
    return out;
}

// Left scaling by (4 A A')^{-1}: symmetrised on the W2 block, lower part on A.
// For N = 1 this is division by 4 a^2.
inline Vec rescale_w2a(int n, const GanState& s, const Vec& g) {
    const Layout l{n};
    const Mat p = (4.0 * s.a * s.a.transpose()).inverse();
    Mat gw(n, n), ga = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) gw(i, j) = gw(j, i) = g(l.w2(i, j));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) ga(i, j) = g(l.tri() + l.a(i, j) - l.a(0, 0));
    const Mat sw = 0.5 * (p * gw + gw * p);
    const Mat sa = p * ga;
    Vec out(g.size());
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) out(l.w2(i, j)) = sw(i, j);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) out(l.tri() + l.a(i, j) - l.a(0, 0)) = sa(i, j);
    return out;
}

}  // namespace detail

inline Mat central_difference_jacobian(const std::function<Vec(const Vec&)>& g, const Vec& x) {
    const Vec g0 = g(x);
    Mat jm(g0.size(), x.size());
    for (int i = 0; i < x.size(); ++i) {
        const double h = 1e-6 * (1.0 + std::abs(x(i)));
        Vec xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        jm.col(i) = (g(xp) - g(xm)) / (2.0 * h);
    }
    return jm;
}

// Value (and optionally Jacobian) of a map at the view coordinates `sub`,
// with the remaining coordinates taken from `base`.
inline FieldEval evaluate_sub(const MapSpec& s, const GanState& base, const Vec& sub, const DataMoments& m,
                              bool want_jac);

inline FieldEval evaluate(const MapSpec& s, const GanState& x, const DataMoments& m, bool want_jac) {
    return evaluate_sub(s, x, s.view.gather(x), m, want_jac);
}

inline FieldEval evaluate_sub(const MapSpec& s, const GanState& base, const Vec& sub, const DataMoments& m,
                              bool want_jac) {
    using detail::require;
    const SubsystemView& v = s.view;
    if (v.n != base.dim() || v.n != m.dim()) throw InvalidArgument("dimension mismatch between map, state and moments");
    if (sub.size() != v.size()) throw InvalidArgument("coordinate vector does not match the view");
    const Resolved p = resolve(s);
    const Vec flat = base.flatten();
    require(v.kind != Kind::COV_ROW || s.id == MapId::F_CC_COVROW, s);

    switch (s.id) {
        case MapId::F: return detail::lin_of_base(v, flat, sub, m, 1.0, 0.0, 0.0, want_jac);
        case MapId::F_CC: return detail::lin_of_base(v, flat, sub, m, 0.0, p.beta, p.beta, want_jac);
        case MapId::F_EG: return detail::lin_of_base(v, flat, sub, m, 0.0, 0.0, p.gamma, want_jac);
        case MapId::F_CON: return detail::lin_of_base(v, flat, sub, m, p.alpha, p.beta, 0.0, want_jac);
        case MapId::F_LIN: return detail::lin_of_base(v, flat, sub, m, p.alpha, p.beta, p.gamma, want_jac);
        case MapId::F_ETA_CC:
            return detail::lin_of_base(v, flat, sub, m, 1.0, 0.5 * p.eta, 0.5 * p.eta, want_jac);

        case MapId::F_REG: {
            bool has_d = false, has_g = false;
            for (int c : v.coords) (detail::is_discriminator_coord(v.n, c) ? has_d : has_g) = true;
            require(has_d && has_g, s);
            return detail::reg_of_base(v, flat, sub, m, p.eta, want_jac);
        }

        case MapId::F_ALT:
        case MapId::F_UNR: {
            const bool alt = s.id == MapId::F_ALT;
            const double r = alt ? p.rho_k : p.rho_k * p.delta_k;
            FieldEval out;
            if (v.kind == Kind::W1B && v.size() == 2 * v.n) {
                const int n = v.n;
                const Vec w1 = sub.head(n), bm = sub.tail(n) - m.mu;
                out.value.resize(2 * n);
                if (alt) {
                    out.value << bm + r * w1, -w1;
                } else {
                    out.value << bm, r * bm - w1;
                }
                if (want_jac) {
                    const Mat id = Mat::Identity(n, n);
                    out.jac = Mat::Zero(2 * n, 2 * n);
                    out.jac.topRightCorner(n, n) = id;
                    out.jac.bottomLeftCorner(n, n) = -id;
                    if (alt)
                        out.jac.topLeftCorner(n, n) = r * id;
                    else
                        out.jac.bottomRightCorner(n, n) = r * id;
                }
                return out;
            }
            require(v.n == 1 && detail::is_full_w2a(v), s);
            // Closed forms on (w2, a); the unrolled row is the alternating row
            // with rho replaced by 2 rho dk.
            const double w2 = sub(0), a = sub(1), s2 = m.sigma(0, 0);
            const double c = alt ? r : 2.0 * r;
            out.value.resize(2);
            out.value << a * a - s2, 2.0 * c * a * a * a - 2.0 * a * (c * s2 + w2);
            if (want_jac) {
                out.jac.resize(2, 2);
                out.jac << 0.0, 2.0 * a, -2.0 * a, 6.0 * c * a * a - 2.0 * (c * s2 + w2);
            }
            return out;
        }

        case MapId::F_CC_PRIME:
        case MapId::F_EG_PRIME: {
            if (!detail::is_full_w2a(v)) {
                // Reordered W2A view: evaluate in canonical order and permute.
                const std::vector<int> perm = detail::w2a_permutation(v);
                require(!perm.empty(), s);
                MapSpec canon = s;
                canon.view = SubsystemView::w2a(v.n);
                Vec csub(sub.size());
                for (int i = 0; i < sub.size(); ++i) csub(perm[i]) = sub(i);
                const FieldEval c = evaluate_sub(canon, base, csub, m, want_jac);
                FieldEval out;
                out.analytic = c.analytic;
                out.value.resize(sub.size());
                for (int i = 0; i < sub.size(); ++i) out.value(i) = c.value(perm[i]);
                if (want_jac) {
                    out.jac.resize(sub.size(), sub.size());
                    for (int i = 0; i < sub.size(); ++i)
                        for (int j = 0; j < sub.size(); ++j) out.jac(i, j) = c.jac(perm[i], perm[j]);
                }
                return out;
            }
            const GanState st = v.with(base, sub);
            detail::require_positive_diagonal(st);
            const bool cc = s.id == MapId::F_CC_PRIME;
            const double be = cc ? p.beta : 0.0, ga = cc ? p.beta : p.gamma;
            FieldEval g = detail::lin_of_base(v, flat, sub, m, 0.0, be, ga, want_jac && v.n == 1);
            FieldEval out;
            out.value = detail::rescale_w2a(v.n, st, g.value);
            if (!want_jac) return out;
            if (v.n == 1) {
                const double a = sub(1);
                out.jac = g.jac / (4.0 * a * a);
                out.jac.col(1) -= g.value / (2.0 * a * a * a);
                return out;
            }
            // No closed form for the N-d scaling derivative.
            const MapSpec spec = s;
            out.jac = central_difference_jacobian(
                [&](const Vec& y) { return evaluate_sub(spec, base, y, m, false).value; }, sub);
            out.analytic = false;
            return out;
        }

        case MapId::F_CC_COVROW: {
            require(v.kind == Kind::COV_ROW, s);
            const int d = v.row - 1;
            const Mat top = base.a.topLeftCorner(d, d);
            const Vec col = m.sigma.col(d).head(d);
            FieldEval out;
            out.value = 2.0 * top.transpose() * (top * sub - col);
            if (want_jac) out.jac = 2.0 * top.transpose() * top;
            return out;
        }
    }
    throw UnsupportedCombination("unhandled map id");
}

inline Vec eval_field(const MapSpec& s, const GanState& x, const DataMoments& m) {
    return evaluate(s, x, m, false).value;
}

// The covariance-row map on raw inputs, for callers holding a rank-deficient
// covariance estimate: 2 T' (T row - col), T the learned upper-left block.
inline Vec covrow_field(const Mat& top, const Vec& row, const Vec& col) {
    return 2.0 * top.transpose() * (top * row - col);
}

struct Method {
    enum Kind { Analytic, CentralDifference } kind = Analytic;

    static Method analytic() { return {Analytic}; }
    static Method central() { return {CentralDifference}; }
};

struct JacobianResult {
    Mat j;
    bool analytic = true;
};

inline JacobianResult jacobian(const MapSpec& s, const GanState& x, const DataMoments& m,
                               Method method = Method::analytic()) {
    if (method.kind == Method::Analytic) {
        FieldEval e = evaluate(s, x, m, true);
        return {e.jac, e.analytic};
    }
    const Mat j = central_difference_jacobian(
        [&](const Vec& y) { return evaluate_sub(s, x, y, m, false).value; }, s.view.gather(x));
    return {j, false};
}

inline Vec jvp(const MapSpec& s, const GanState& x, const DataMoments& m, const Vec& v,
               Method method = Method::analytic()) {
    if (method.kind == Method::Analytic) return jacobian(s, x, m, method).j * v;
    const double vn = v.norm();
    if (vn == 0.0) return Vec::Zero(v.size());
    const Vec sub = s.view.gather(x);
    const double h = 1e-6 * (1.0 + sub.norm()) / vn;
    return (evaluate_sub(s, x, sub + h * v, m, false).value - evaluate_sub(s, x, sub - h * v, m, false).value) /
           (2.0 * h);
}

inline Vec vjp(const MapSpec& s, const GanState& x, const DataMoments& m, const Vec& v,
               Method method = Method::analytic()) {
    return jacobian(s, x, m, method).j.transpose() * v;
}

// (alpha I + beta J' - gamma J) F for an arbitrary base map.
inline Vec lin_precondition(const MapSpec& base, double alpha, double beta, double gamma, const GanState& x,
                            const DataMoments& m) {
    FieldEval e = evaluate(base, x, m, beta != 0.0 || gamma != 0.0);
    Vec out = alpha * e.value;
    if (beta != 0.0) out += beta * e.jac.transpose() * e.value;
    if (gamma != 0.0) out -= gamma * e.jac * e.value;
    return out;
}

// Potential of the rescaled curl map on (w2, a) taken at unit curl weight,
// (J' - J)F / (4 a^2) = [2 w2, (a^2 - sigma^2) / a]. The default F_CC_PRIME
// (weight 1/2) is half its gradient.
inline double potential_cc_prime(double w2, double a, double sigma2) {
    if (!(a > 0.0)) throw DomainError("potential needs a > 0");
    if (!(sigma2 > 0.0)) throw DomainError("potential needs sigma2 > 0");
    return w2 * w2 + 0.5 * ((a * a - sigma2) - sigma2 * std::log(a * a / sigma2));
}

}  // namespace lqgan
