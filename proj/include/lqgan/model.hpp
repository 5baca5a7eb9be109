// Parameter space of the LQ-GAN, data moments, equilibrium and samplers.
//
// The generator is G(z) = A z + b, the discriminator D(y) = y' W2 y + w1' y.
// A state is flattened as (upper triangle of W2 row-major incl. diagonal, w1,
// lower triangle of A row-major incl. diagonal, b).
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lqgan/errors.hpp"

namespace lqgan {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Index arithmetic for the flattened coordinate vector of an N-dim state.
struct Layout {
    int n = 1;

    int tri() const { return n * (n + 1) / 2; }
    int size() const { return n * n + 3 * n; }
    // W2 entry (i, j) with i <= j.
    int w2(int i, int j) const {
        if (i > j) std::swap(i, j);
        return i * n - i * (i - 1) / 2 + (j - i);
    }
    int w1(int i) const { return tri() + i; }
    // A entry (i, j) with i >= j.
    int a(int i, int j) const { return tri() + n + i * (i + 1) / 2 + j; }
    int b(int i) const { return 2 * tri() + n + i; }
};

struct DataMoments {
    Vec mu;
    Mat sigma;

    int dim() const { return static_cast<int>(mu.size()); }

    static DataMoments scalar(double mu, double sigma2) {
        DataMoments m;
        m.mu = Vec::Constant(1, mu);
        m.sigma = Mat::Constant(1, 1, sigma2);
        m.validate();
        return m;
    }

    static DataMoments make(Vec mu, Mat sigma) {
        DataMoments m{std::move(mu), std::move(sigma)};
        m.validate();
        return m;
    }

    void validate() const;
};

// Lower Cholesky factor. A pivot is accepted only above 1e-12 * trace(sigma).
inline Mat cholesky(const Mat& sigma) {
    const int n = static_cast<int>(sigma.rows());
    if (n == 0 || sigma.cols() != n) throw InvalidArgument("cholesky needs a non-empty square matrix");
    const double floor = 1e-12 * std::abs(sigma.trace());
    Mat l = Mat::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        double d = sigma(j, j);
        for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > floor)) {
            throw NotPositiveDefinite("leading minor " + std::to_string(j + 1) + " has pivot " +
                                      std::to_string(d));
        }
        l(j, j) = std::sqrt(d);
        for (int i = j + 1; i < n; ++i) {
            double s = sigma(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

inline void DataMoments::validate() const {
    const int n = dim();
    if (n < 1) throw InvalidArgument("moments need dim >= 1");
    if (sigma.rows() != n || sigma.cols() != n) throw InvalidArgument("sigma shape does not match mu");
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InvalidArgument("sigma is not symmetric");
    (void)cholesky(sigma);
}

struct GanState {
    Mat w2;
    Vec w1;
    Mat a;
    Vec b;

    int dim() const { return static_cast<int>(b.size()); }

    static GanState zeros(int n) {
        return GanState{Mat::Zero(n, n), Vec::Zero(n), Mat::Zero(n, n), Vec::Zero(n)};
    }

    // Scalar state (w2, w1, a, b) for N = 1.
    static GanState scalar(double w2, double w1, double a, double b) {
        GanState s = zeros(1);
        s.w2(0, 0) = w2;
        s.w1(0) = w1;
        s.a(0, 0) = a;
        s.b(0) = b;
        return s;
    }

    Vec flatten() const {
        const Layout l{dim()};
        Vec v(l.size());
        for (int i = 0; i < l.n; ++i)
            for (int j = i; j < l.n; ++j) v(l.w2(i, j)) = w2(i, j);
        for (int i = 0; i < l.n; ++i) v(l.w1(i)) = w1(i);
        for (int i = 0; i < l.n; ++i)
            for (int j = 0; j <= i; ++j) v(l.a(i, j)) = a(i, j);
        for (int i = 0; i < l.n; ++i) v(l.b(i)) = b(i);
        return v;
    }

    static GanState unflatten(int n, const Vec& v) {
        const Layout l{n};
        if (v.size() != l.size()) throw InvalidArgument("flat vector has wrong length");
        GanState s = zeros(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) s.w2(i, j) = s.w2(j, i) = v(l.w2(i, j));
        for (int i = 0; i < n; ++i) s.w1(i) = v(l.w1(i));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) s.a(i, j) = v(l.a(i, j));
        for (int i = 0; i < n; ++i) s.b(i) = v(l.b(i));
        return s;
    }

    // Structural checks; a positive diagonal of A is checked separately
    // because intermediate iterates may legitimately leave that region.
    bool is_structured() const {
        const int n = dim();
        if (w2.rows() != n || w2.cols() != n || a.rows() != n || a.cols() != n || w1.size() != n)
            return false;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (w2(i, j) != w2(j, i)) return false;
                if (j > i && a(i, j) != 0.0) return false;
            }
        return true;
    }

    bool has_positive_diagonal() const {
        for (int i = 0; i < dim(); ++i)
            if (!(a(i, i) > 0.0)) return false;
        return true;
    }
};

inline GanState equilibrium(const DataMoments& m) {
    GanState s = GanState::zeros(m.dim());
    s.a = cholesky(m.sigma);
    s.b = m.mu;
    return s;
}

inline double distance_ratio(const Vec& x, const Vec& x0, const Vec& xstar) {
    if (x.size() != x0.size() || x.size() != xstar.size())
        throw InvalidArgument("distance_ratio: dimension mismatch");
    const double den = (x0 - xstar).norm();
    if (den == 0.0) throw DegenerateStart("start coincides with the equilibrium");
    return (x - xstar).norm() / den;
}

inline double distance_ratio(const GanState& x, const GanState& x0, const GanState& xstar) {
    return distance_ratio(x.flatten(), x0.flatten(), xstar.flatten());
}

// ---------------------------------------------------------------------------
// Subsystem views

enum class Kind { W1B, W2A, FULL_1D, FULL_ND, COV_ROW };

struct SubsystemView {
    Kind kind = Kind::FULL_1D;
    int n = 1;
    int row = 0;  // 1-based covariance row for COV_ROW, unused otherwise
    std::vector<int> coords;

    int size() const { return static_cast<int>(coords.size()); }

    static SubsystemView w1b(int n = 1) {
        SubsystemView v{Kind::W1B, n, 0, {}};
        const Layout l{n};
        for (int i = 0; i < n; ++i) v.coords.push_back(l.w1(i));
        for (int i = 0; i < n; ++i) v.coords.push_back(l.b(i));
        return v;
    }

    static SubsystemView w2a(int n = 1) {
        SubsystemView v{Kind::W2A, n, 0, {}};
        const Layout l{n};
        for (int i = 0; i < l.tri(); ++i) v.coords.push_back(i);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) v.coords.push_back(l.a(i, j));
        return v;
    }

    // W2A semantics with a caller-chosen subset and order of coordinates.
    static SubsystemView w2a_coords(int n, std::vector<int> coords) {
        SubsystemView v{Kind::W2A, n, 0, std::move(coords)};
        v.validate();
        return v;
    }

    static SubsystemView full(int n) {
        SubsystemView v{n == 1 ? Kind::FULL_1D : Kind::FULL_ND, n, 0, {}};
        for (int i = 0; i < Layout{n}.size(); ++i) v.coords.push_back(i);
        return v;
    }

    // Off-diagonal entries A(d, 0..d-2) of row d (1-based, d >= 2).
    static SubsystemView cov_row(int n, int d) {
        if (d < 2 || d > n) throw InvalidArgument("COV_ROW needs 2 <= d <= N");
        SubsystemView v{Kind::COV_ROW, n, d, {}};
        const Layout l{n};
        for (int j = 0; j < d - 1; ++j) v.coords.push_back(l.a(d - 1, j));
        return v;
    }

    void validate() const {
        const int total = Layout{n}.size();
        std::vector<bool> seen(total, false);
        for (int c : coords) {
            if (c < 0 || c >= total) throw InvalidArgument("view coordinate out of range");
            if (seen[c]) throw InvalidArgument("view coordinates repeat");
            seen[c] = true;
        }
    }

    Vec gather(const Vec& flat) const {
        Vec out(size());
        for (int i = 0; i < size(); ++i) out(i) = flat(coords[i]);
        return out;
    }

    void scatter(Vec& flat, const Vec& sub) const {
        for (int i = 0; i < size(); ++i) flat(coords[i]) = sub(i);
    }

    Vec gather(const GanState& s) const { return gather(s.flatten()); }

    GanState with(const GanState& base, const Vec& sub) const {
        Vec flat = base.flatten();
        scatter(flat, sub);
        return GanState::unflatten(n, flat);
    }

    std::string name() const {
        switch (kind) {
            case Kind::W1B: return "W1B";
            case Kind::W2A: return "W2A";
            case Kind::FULL_1D: return "FULL_1D";
            case Kind::FULL_ND: return "FULL_ND";
            case Kind::COV_ROW: return "COV_ROW(" + std::to_string(row) + ")";
        }
        return "?";
    }
};

// Parses "W1B", "W2A", "FULL_1D", "FULL_ND", "COV_ROW(d)".
inline SubsystemView parse_view(const std::string& s, int n) {
    if (s == "W1B") return SubsystemView::w1b(n);
    if (s == "W2A") return SubsystemView::w2a(n);
    if (s == "FULL_1D") {
        if (n != 1) throw InvalidArgument("FULL_1D needs dim 1");
        return SubsystemView::full(1);
    }
    if (s == "FULL_ND") return SubsystemView::full(n);
    if (s.rfind("COV_ROW(", 0) == 0 && s.back() == ')')
        return SubsystemView::cov_row(n, std::stoi(s.substr(8, s.size() - 9)));
    throw InvalidArgument("unknown subsystem '" + s + "'");
}

// ---------------------------------------------------------------------------
// Samplers

struct ExactSource {
    DataMoments moments;
};
struct GaussianSource {
    DataMoments moments;
};
struct EmpiricalSource {
    Mat rows;  // one sample per row
};

class Sampler {
public:
    using Source = std::variant<ExactSource, GaussianSource, EmpiricalSource>;

    Sampler(Source src, std::uint64_t seed) : src_(std::move(src)), seed_(seed), rng_(seed) {
        if (auto* g = std::get_if<GaussianSource>(&src_)) chol_ = cholesky(g->moments.sigma);
        if (auto* e = std::get_if<EmpiricalSource>(&src_); e && e->rows.rows() == 0)
            throw InvalidArgument("empirical sampler has no rows");
    }

    static Sampler exact(const DataMoments& m) { return Sampler(ExactSource{m}, 0); }
    static Sampler gaussian(const DataMoments& m, std::uint64_t seed) {
        return Sampler(GaussianSource{m}, seed);
    }
    static Sampler empirical(Mat rows, std::uint64_t seed) {
        return Sampler(EmpiricalSource{std::move(rows)}, seed);
    }

    // Reads whitespace- or comma-separated numeric rows, one sample per line.
    static Sampler from_file(const std::string& path, std::uint64_t seed) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open " + path);
        std::vector<std::vector<double>> rows;
        std::string line;
        while (std::getline(in, line)) {
            for (char& c : line)
                if (c == ',') c = ' ';
            std::istringstream ls(line);
            std::vector<double> r;
            double v;
            while (ls >> v) r.push_back(v);
            if (r.empty()) continue;
            if (!rows.empty() && r.size() != rows.front().size())
                throw IoError(path + ": ragged rows");
            rows.push_back(std::move(r));
        }
        if (rows.empty()) throw IoError(path + ": no data rows");
        Mat m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
        return empirical(std::move(m), seed);
    }

    bool is_exact() const { return std::holds_alternative<ExactSource>(src_); }
    const DataMoments* exact_moments() const {
        auto* e = std::get_if<ExactSource>(&src_);
        return e ? &e->moments : nullptr;
    }
    std::uint64_t seed() const { return seed_; }

    int dim() const {
        return std::visit(
            [](const auto& s) -> int {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, EmpiricalSource>)
                    return static_cast<int>(s.rows.cols());
                else
                    return s.moments.dim();
            },
            src_);
    }

    // B samples as the rows of a B x N matrix. Not defined for the exact source.
    Mat draw(int batch) {
        const int n = dim();
        Mat out(batch, n);
        if (auto* g = std::get_if<GaussianSource>(&src_)) {
            Vec z(n);
            for (int s = 0; s < batch; ++s) {
                for (int i = 0; i < n; ++i) z(i) = normal_(rng_);
                out.row(s) = (g->moments.mu + chol_ * z).transpose();
            }
        } else if (auto* e = std::get_if<EmpiricalSource>(&src_)) {
            std::uniform_int_distribution<Eigen::Index> pick(0, e->rows.rows() - 1);
            for (int s = 0; s < batch; ++s) out.row(s) = e->rows.row(pick(rng_));
        } else {
            throw InvalidArgument("the exact-moments sampler has no samples to draw");
        }
        return out;
    }

private:
    Source src_;
    std::uint64_t seed_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    Mat chol_;
};

struct MomentEstimate {
    Vec mu_hat;
    Mat sigma_hat;
};

// Batch mean and the 1/(B-1) second moment centred at mean_ref. The exact
// source returns mu and sigma + (mu - ref)(mu - ref)', which is what the
// estimator converges to; this is sigma itself when ref = mu.
// Normaliser of the second-moment estimate. BMinusOne is the printed
// 1/(B-1); Batch divides by B, which is unbiased when mean_ref is the true mean.
enum class Divisor { BMinusOne, Batch };

inline MomentEstimate estimate_moments(Sampler& sampler, int batch, const Vec& mean_ref,
                                       bool want_sigma = true, Divisor div = Divisor::BMinusOne) {
    if (batch < 1 || (want_sigma && batch < 2))
        throw BatchTooSmall("batch " + std::to_string(batch) + " too small");
    if (const DataMoments* m = sampler.exact_moments()) {
        MomentEstimate e{m->mu, Mat()};
        if (want_sigma) {
            const Vec d = m->mu - mean_ref;
            e.sigma_hat = m->sigma + d * d.transpose();
        }
        return e;
    }
    const Mat y = sampler.draw(batch);
    MomentEstimate e{y.colwise().mean().transpose(), Mat()};
    if (want_sigma) {
        const Mat c = y.rowwise() - mean_ref.transpose();
        e.sigma_hat = (c.transpose() * c) / static_cast<double>(div == Divisor::Batch ? batch : batch - 1);
    }
    return e;
}

}  // namespace lqgan
