// Monotonicity and Hurwitz certification by sampling.
#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "lqgan/fields.hpp"
#include "lqgan/random.hpp"

namespace lqgan {

struct HurwitzResult {
    bool is_hurwitz;
    double min_real_part;
};

inline HurwitzResult hurwitz_check(const Mat& j, double tol = 0.0) {
    if (!j.allFinite()) throw InvalidArgument("hurwitz_check: non-finite matrix");
    Eigen::EigenSolver<Mat> es(j, false);
    if (es.info() != Eigen::Success) throw EigenFailure("eigenvalues did not converge");
    const double m = es.eigenvalues().real().minCoeff();
    return {m > tol, m};
}

inline Vec sym_eigenvalues(const Mat& j) {
    if (!j.allFinite()) throw InvalidArgument("non-finite matrix");
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (j + j.transpose()), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw EigenFailure("symmetric eigenvalues did not converge");
    return es.eigenvalues();
}

// Minimum eigenvalue of (J + J') / 2.
inline double psd_grade(const Mat& j) { return sym_eigenvalues(j).minCoeff(); }

enum class Grade { Strongly, Strictly, Monotone, PseudoConsistent, QuasiConsistent, Violated };

inline std::string to_string(Grade g) {
    switch (g) {
        case Grade::Strongly: return "strongly";
        case Grade::Strictly: return "strictly";
        case Grade::Monotone: return "monotone";
        case Grade::PseudoConsistent: return "pseudo-consistent";
        case Grade::QuasiConsistent: return "quasi-consistent";
        case Grade::Violated: return "violated";
    }
    return "?";
}

inline Grade grade_from_psd(double min_eig, double s, double tol) {
    if (s > 0.0 && min_eig >= s) return Grade::Strongly;
    if (min_eig > 0.0) return Grade::Strictly;
    if (min_eig >= -tol) return Grade::Monotone;
    return Grade::Violated;
}

struct RegionBox {
    Vec lower, upper;
    std::vector<bool> positive;  // coordinates that must stay above eps
    double eps = 1e-6;

    static RegionBox make(Vec lo, Vec hi, std::vector<bool> pos = {}, double eps = 1e-6) {
        RegionBox r{std::move(lo), std::move(hi), std::move(pos), eps};
        if (r.positive.empty()) r.positive.assign(r.lower.size(), false);
        r.validate();
        return r;
    }

    // Box over a view with the diagonal of A masked positive.
    static RegionBox for_view(const SubsystemView& v, const Vec& lo, const Vec& hi, double eps = 1e-6) {
        std::vector<bool> pos(v.size(), false);
        const Layout l{v.n};
        for (int k = 0; k < v.size(); ++k)
            for (int i = 0; i < v.n; ++i)
                if (v.coords[k] == l.a(i, i)) pos[k] = true;
        return make(lo, hi, pos, eps);
    }

    int dim() const { return static_cast<int>(lower.size()); }

    void validate() const {
        if (lower.size() == 0 || lower.size() != upper.size() || static_cast<int>(positive.size()) != dim())
            throw InvalidArgument("region bounds have inconsistent sizes");
        for (int i = 0; i < dim(); ++i) {
            if (!(lower(i) < upper(i))) throw InvalidArgument("region needs lower < upper");
            if (positive[i] && !(upper(i) > eps)) throw InvalidArgument("masked coordinate has no positive part");
        }
        if (!(eps > 0.0)) throw InvalidArgument("region eps must be positive");
    }

    template <class Rng>
    Vec sample(Rng& rng) const {
        Vec x(dim());
        for (int i = 0; i < dim(); ++i) {
            const double lo = positive[i] ? std::max(lower(i), eps) : lower(i);
            x(i) = std::uniform_real_distribution<double>(lo, upper(i))(rng);
        }
        return x;
    }
};

struct Witness {
    std::vector<Vec> points;
    Vec direction;
    double value = 0.0;
};

struct CertReport {
    Grade grade = Grade::QuasiConsistent;
    std::optional<Witness> witness;
    long samples = 0;
    long skipped = 0;
    double tolerance = 1e-8;
    double min_value = std::numeric_limits<double>::infinity();
};

// v' J v at view coordinates `sub`.
inline double orthogonal_curvature(const MapSpec& s, const GanState& base, const DataMoments& m, const Vec& sub,
                                   const Vec& v) {
    const FieldEval e = evaluate_sub(s, base, sub, m, true);
    return v.dot(e.jac * v);
}

// Orthonormal basis of the complement of f (columns), by Gram-Schmidt of the
// standard basis against f / |f|.
inline Mat complement_basis(const Vec& f) {
    const int n = static_cast<int>(f.size());
    std::vector<Vec> basis{f.normalized()};
    for (int i = 0; i < n && static_cast<int>(basis.size()) < n; ++i) {
        Vec e = Vec::Unit(n, i);
        for (const Vec& q : basis) e -= q.dot(e) * q;
        for (const Vec& q : basis) e -= q.dot(e) * q;
        if (e.norm() > 1e-8) basis.push_back(e.normalized());
    }
    Mat q(n, n - 1);
    for (int i = 1; i < n; ++i) q.col(i - 1) = basis[i];
    return q;
}

struct ProbeOptions {
    double tol = 1e-8;
    int workers = 1;
    int block = 256;  // points per seeded block; fixes results independent of worker count
};

namespace detail {

struct ProbeHit {
    double value = std::numeric_limits<double>::infinity();
    Vec point, direction;
    long samples = 0, skipped = 0;
};

// Runs fn(block_index, hit) over blocks on a small thread pool and reduces by
// minimum value, ties broken by block index.
template <class Fn>
ProbeHit run_blocks(long n_points, const ProbeOptions& o, Fn fn) {
    const long nblocks = (n_points + o.block - 1) / o.block;
    std::vector<ProbeHit> hits(nblocks);
    const int workers = std::max(1, std::min<int>(o.workers, static_cast<int>(nblocks)));
    auto work = [&](int w) {
        for (long b = w; b < nblocks; b += workers) fn(b, std::min<long>(o.block, n_points - b * o.block), hits[b]);
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    ProbeHit total;
    for (const ProbeHit& h : hits) {
        total.samples += h.samples;
        total.skipped += h.skipped;
        if (h.value < total.value) {
            total.value = h.value;
            total.point = h.point;
            total.direction = h.direction;
        }
    }
    return total;
}

}  // namespace detail

// Samples points in the region and records min v'Jv over unit v orthogonal to
// F(x). With n_dirs = 0 the exact minimum over the complement is taken (the
// smallest eigenvalue of the projected symmetric Jacobian); otherwise n_dirs
// random unit directions are drawn per point.
inline CertReport condition_a_probe(const MapSpec& s, const GanState& base, const DataMoments& m,
                                    const RegionBox& region, long n_points, int n_dirs, std::uint64_t seed,
                                    ProbeOptions o = {}) {
    region.validate();
    if (region.dim() != s.view.size()) throw InvalidArgument("region does not match the view");
    const detail::ProbeHit hit = detail::run_blocks(n_points, o, [&](long b, long count, detail::ProbeHit& h) {
        std::mt19937_64 rng(mix_seed(seed, {static_cast<std::uint64_t>(b)}));
        std::normal_distribution<double> normal;
        for (long i = 0; i < count; ++i) {
            const Vec x = region.sample(rng);
            const FieldEval e = evaluate_sub(s, base, x, m, true);
            ++h.samples;
            if (e.value.norm() < 1e-10 || e.value.size() < 2) {
                ++h.skipped;
                continue;
            }
            const Mat q = complement_basis(e.value);
            const Mat js = 0.5 * (e.jac + e.jac.transpose());
            Vec best_v;
            double best = std::numeric_limits<double>::infinity();
            if (n_dirs <= 0) {
                Eigen::SelfAdjointEigenSolver<Mat> es(q.transpose() * js * q);
                if (es.info() != Eigen::Success) throw EigenFailure("projected Jacobian");
                best = es.eigenvalues()(0);
                best_v = (q * es.eigenvectors().col(0)).normalized();
            } else {
                for (int d = 0; d < n_dirs; ++d) {
                    Vec c(q.cols());
                    for (int k = 0; k < c.size(); ++k) c(k) = normal(rng);
                    const Vec v = (q * c).normalized();
                    const double val = v.dot(e.jac * v);
                    if (val < best) best = val, best_v = v;
                }
            }
            if (best < h.value) {
                h.value = best;
                h.point = x;
                h.direction = best_v;
            }
        }
    });
    CertReport r;
    r.samples = hit.samples;
    r.skipped = hit.skipped;
    r.tolerance = o.tol;
    r.min_value = hit.value;
    if (hit.value < -o.tol) {
        r.grade = Grade::Violated;
        r.witness = Witness{{hit.point}, hit.direction, orthogonal_curvature(s, base, m, hit.point, hit.direction)};
    }
    return r;
}

// Condition (B): <F(x), x - x*> >= -tol at sampled points.
inline CertReport condition_b_probe(const MapSpec& s, const GanState& base, const DataMoments& m,
                                    const RegionBox& region, long n_points, std::uint64_t seed,
                                    ProbeOptions o = {}) {
    region.validate();
    const Vec xs = s.view.gather(equilibrium(m));
    const detail::ProbeHit hit = detail::run_blocks(n_points, o, [&](long b, long count, detail::ProbeHit& h) {
        std::mt19937_64 rng(mix_seed(seed, {static_cast<std::uint64_t>(b), 0xB}));
        for (long i = 0; i < count; ++i) {
            const Vec x = region.sample(rng);
            const double val = evaluate_sub(s, base, x, m, false).value.dot(x - xs);
            ++h.samples;
            if (val < h.value) {
                h.value = val;
                h.point = x;
                h.direction = x - xs;
            }
        }
    });
    CertReport r;
    r.samples = hit.samples;
    r.tolerance = o.tol;
    r.min_value = hit.value;
    r.grade = Grade::PseudoConsistent;
    if (hit.value < -o.tol) {
        r.grade = Grade::Violated;
        r.witness = Witness{{hit.point, xs}, hit.direction, hit.value};
    }
    return r;
}

struct PairResult {
    bool violated;
    double at_y;  // <F(y), x - y>
    double at_x;  // <F(x), x - y>
};

inline PairResult quasimono_pair_test(const MapSpec& s, const GanState& base, const DataMoments& m, const Vec& x,
                                      const Vec& y, double tol = 1e-8) {
    const Vec d = x - y;
    const double p = evaluate_sub(s, base, y, m, false).value.dot(d);
    const double q = evaluate_sub(s, base, x, m, false).value.dot(d);
    return {p > tol && q < -tol, p, q};
}

// Grades a map over a region: psd_grade at every sample decides the monotone
// grades; otherwise conditions (A) and (B) decide between pseudo/quasi
// consistency and a violation.
inline CertReport certify(const MapSpec& s, const GanState& base, const DataMoments& m, const RegionBox& region,
                          long n_points, std::uint64_t seed, double strong = 0.0, ProbeOptions o = {}) {
    const detail::ProbeHit psd = detail::run_blocks(n_points, o, [&](long b, long count, detail::ProbeHit& h) {
        std::mt19937_64 rng(mix_seed(seed, {static_cast<std::uint64_t>(b), 0xC}));
        for (long i = 0; i < count; ++i) {
            const Vec x = region.sample(rng);
            const double val = psd_grade(evaluate_sub(s, base, x, m, true).jac);
            ++h.samples;
            if (val < h.value) h.value = val, h.point = x;
        }
    });
    CertReport r;
    r.samples = psd.samples;
    r.tolerance = o.tol;
    r.min_value = psd.value;
    const Grade g = grade_from_psd(psd.value, strong, o.tol);
    if (g != Grade::Violated) {
        r.grade = g;
        return r;
    }
    CertReport a = condition_a_probe(s, base, m, region, n_points, 0, seed, o);
    if (a.grade == Grade::Violated) return a;
    CertReport bb = condition_b_probe(s, base, m, region, n_points, seed, o);
    r.grade = bb.grade == Grade::Violated ? Grade::QuasiConsistent : Grade::PseudoConsistent;
    return r;
}

// Jacobian of the curl-preconditioned affine field (J' - J)(Jx + b).
inline Mat cc_jacobian(const Mat& j) { return (j.transpose() - j) * j; }

}  // namespace lqgan
