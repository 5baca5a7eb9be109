// Stagewise training of the LQ-GAN: mean, then per-dimension scale, then the
// off-diagonal rows of A one at a time. Each stage is a monotone subproblem
// solved with 1/(k+1) steps.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "lqgan/dynamics.hpp"
#include "lqgan/model.hpp"

namespace lqgan {

struct StagewiseConfig {
    long K = 20000;  // iterations per stage
    int B = 2;
    double sigma_min = 1e-2;
    std::uint64_t seed = 0;
    // Keep refining the mean during the scale stage with weight e (see
    // ongoing_mean_weight); 0 disables.
    double ongoing_mean_weight = 0.0;
    // Batch keeps the variance and covariance estimates centred at mu_K
    // unbiased; BMinusOne inflates them by B/(B-1).
    Divisor divisor = Divisor::Batch;

    void validate() const {
        if (K < 1) throw InvalidArgument("K must be >= 1");
        if (B < 2) throw BatchTooSmall("B must be >= 2");
        if (!(sigma_min > 0.0)) throw InvalidArgument("sigma_min must be positive");
        if (ongoing_mean_weight < 0.0) throw InvalidArgument("ongoing mean weight must be >= 0");
    }
};

struct StagewiseResult {
    Vec mu_K;
    Vec sigma_K;
    Mat A_K;
    double ratio = 1.0;
    std::vector<double> stage_ratios;  // after mean, scale, and each covariance row
    long iterations = 0;
};

// Running mean: the k-th batch enters with weight 1/k, so the result is the
// average of all K*B samples and the first batch fully replaces the zero start.
inline Vec learn_mean(Sampler& sampler, long K, int B) {
    Vec mu = Vec::Zero(sampler.dim());
    for (long k = 1; k <= K; ++k) {
        const Vec mu_hat = estimate_moments(sampler, B, mu, false).mu_hat;
        mu += (mu_hat - mu) / static_cast<double>(k);
    }
    return mu;
}

// Projected steps sigma <- clip(sigma - (sigma^2 - s2_hat) / (2 sigma (k+1)), sigma_min)
// starting from sigma = 1, with s2_hat centred at mu_K.
inline Vec learn_variance(Sampler& sampler, const Vec& mu_K, long K, int B, double sigma_min,
                          double ongoing_weight = 0.0, Vec* mu_track = nullptr, Divisor div = Divisor::Batch) {
    if (B < 2) throw BatchTooSmall("variance needs B >= 2");
    Vec sigma = Vec::Ones(sampler.dim());
    Vec mu = mu_K;
    for (long k = 1; k <= K; ++k) {
        const MomentEstimate e = estimate_moments(sampler, B, mu, true, div);
        const Vec s2 = e.sigma_hat.diagonal();
        const double rho = 1.0 / static_cast<double>(k + 1);
        for (int i = 0; i < sigma.size(); ++i) {
            const double f = (sigma(i) * sigma(i) - s2(i)) / (2.0 * sigma(i));
            sigma(i) = std::max(sigma(i) - rho * f, sigma_min);
        }
        if (ongoing_weight > 0.0) mu += std::min(1.0, ongoing_weight * rho) * (e.mu_hat - mu);
    }
    if (mu_track) *mu_track = mu;
    return sigma;
}

// Smallest weight e for the ongoing mean update: e > mu_max^2 / sigma_min^2 + 1/2.
inline double ongoing_mean_weight(double mu_max, double sigma_min) {
    if (!(sigma_min > 0.0)) throw InvalidArgument("sigma_min must be positive");
    return mu_max * mu_max / (sigma_min * sigma_min) + 0.5;
}

// Learns the off-diagonal entries of row d (1-based, d >= 2) of A with the
// rows above fixed. Each iteration draws one covariance estimate, takes a
// projected half-step, re-evaluates the field there and takes the full step
// from the previous row.
inline Vec learn_covariance_row(const Mat& A, int d, Sampler& sampler, const Vec& mu_K, double sigma_d, long K,
                                int B, double sigma_min, Divisor div = Divisor::Batch) {
    const int n = static_cast<int>(A.rows());
    if (d < 2 || d > n) throw InvalidArgument("row index must satisfy 2 <= d <= N");
    const Mat top = A.topLeftCorner(d - 1, d - 1);
    Vec row = A.row(d - 1).head(d - 1).transpose();
    for (long k = 1; k <= K; ++k) {
        const Mat sh = estimate_moments(sampler, B, mu_K, true, div).sigma_hat;
        const Vec col = sh.col(d - 1).head(d - 1);
        const double rho = 1.0 / static_cast<double>(k + 1);
        const Vec half = ball_project(row - rho * covrow_field(top, row, col), sigma_d, sigma_min);
        row = ball_project(row - rho * covrow_field(top, half, col), sigma_d, sigma_min);
    }
    return row;
}

inline double recover_diagonal(double sigma_d, const Vec& row) {
    const double r = sigma_d * sigma_d - row.squaredNorm();
    if (!(r > 0.0)) throw NegativeRadicand("sigma_d^2 - |row|^2 = " + std::to_string(r));
    return std::sqrt(r);
}

inline StagewiseResult run_stagewise(Sampler& sampler, const DataMoments& truth, const StagewiseConfig& cfg) {
    cfg.validate();
    const int n = truth.dim();
    if (sampler.dim() != n) throw InvalidArgument("sampler and moments differ in dimension");
    const GanState xs = equilibrium(truth);
    GanState x0 = GanState::zeros(n);
    x0.a = Mat::Identity(n, n);
    GanState x = x0;

    StagewiseResult r;
    r.mu_K = learn_mean(sampler, cfg.K, cfg.B);
    x.b = r.mu_K;
    r.stage_ratios.push_back(distance_ratio(x, x0, xs));

    Vec mu_after = r.mu_K;
    r.sigma_K = learn_variance(sampler, r.mu_K, cfg.K, cfg.B, cfg.sigma_min, cfg.ongoing_mean_weight, &mu_after,
                             cfg.divisor);
    if (cfg.ongoing_mean_weight > 0.0) {
        r.mu_K = mu_after;
        x.b = r.mu_K;
    }
    x.a(0, 0) = r.sigma_K(0);
    r.stage_ratios.push_back(distance_ratio(x, x0, xs));
    r.iterations = 2 * cfg.K;

    for (int d = 2; d <= n; ++d) {
        const Vec row = learn_covariance_row(x.a, d, sampler, r.mu_K, r.sigma_K(d - 1), cfg.K, cfg.B, cfg.sigma_min,
                                                 cfg.divisor);
        x.a.row(d - 1).head(d - 1) = row.transpose();
        x.a(d - 1, d - 1) = recover_diagonal(r.sigma_K(d - 1), row);
        r.stage_ratios.push_back(distance_ratio(x, x0, xs));
        r.iterations += cfg.K;
    }
    r.A_K = x.a;
    r.ratio = r.stage_ratios.back();
    return r;
}

// Iterations k with P(|estimate - mu| >= t+) <= delta for samples in
// [y_low, y_hi], where t+ = -|mu| + sqrt(mu^2 + d sigma^2).
inline long hoeffding_iterations(double y_low, double y_hi, double mu, double sigma, double d, double delta) {
    if (!(y_low < y_hi)) throw DegenerateInterval("need y_low < y_hi");
    if (!(0.0 < d && d < 1.0) || !(0.0 < delta && delta < 1.0) || !(sigma > 0.0))
        throw InvalidArgument("need 0 < d < 1, 0 < delta < 1, sigma > 0");
    const double tp = -std::abs(mu) + std::sqrt(mu * mu + d * sigma * sigma);
    const double q = (y_hi - y_low) / tp;
    return static_cast<long>(std::ceil(q * q * std::log(std::sqrt(2.0) / std::sqrt(delta))));
}

inline long chernoff_iterations(double mu, double sigma, double d, double delta) {
    if (!(0.0 < d && d < 1.0) || !(0.0 < delta && delta < 1.0) || !(sigma > 0.0))
        throw InvalidArgument("need 0 < d < 1, 0 < delta < 1, sigma > 0");
    const double tp = -std::abs(mu) + std::sqrt(mu * mu + d * sigma * sigma);
    const double q = sigma / tp;
    return static_cast<long>(std::ceil(q * q * std::log(2.0 / delta)));
}

}  // namespace lqgan
