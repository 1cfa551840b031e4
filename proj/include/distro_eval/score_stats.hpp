#pragma once

// Score distributions: summaries, Gaussian KDE, empirical and inverse CDFs,
// and a grid-based KL-divergence estimate between two score samples.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace distro_eval {

/// Ordered multiset of finite scores from repeated trials.
class ScoreSample {
public:
    ScoreSample(std::vector<double> scores, std::string label = {})
        : scores_(std::move(scores)), label_(std::move(label))
    {
        if (scores_.empty()) {
            throw std::invalid_argument("empty sample");
        }
        for (double s : scores_) {
            if (!std::isfinite(s)) {
                throw std::invalid_argument("non-finite score in sample '" + label_ + "'");
            }
        }
        sorted_ = scores_;
        std::sort(sorted_.begin(), sorted_.end());
    }

    std::span<const double> scores() const noexcept { return scores_; }
    std::span<const double> sorted() const noexcept { return sorted_; }
    const std::string& label() const noexcept { return label_; }
    std::size_t size() const noexcept { return scores_.size(); }

private:
    std::vector<double> scores_;
    std::vector<double> sorted_;
    std::string label_;
};

struct SummaryStats {
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0;  ///< sample standard deviation, n-1 denominator
    double min = 0.0;
    double max = 0.0;
    std::vector<std::pair<double, double>> quantiles;  ///< (q, value)
};

/// Left-continuous inverse of the empirical CDF: the ceil(q*n)-th order
/// statistic (1-based). Only ever returns observed scores.
inline double quantile(const ScoreSample& sample, double q)
{
    if (!(q > 0.0 && q <= 1.0)) {
        throw std::domain_error("quantile level must lie in (0, 1]");
    }
    const auto sorted = sample.sorted();
    const double n = static_cast<double>(sorted.size());
    // Shave a relative ulp-scale amount so that e.g. 0.3 * 10 selects rank 3.
    auto rank = static_cast<std::size_t>(std::ceil(q * n * (1.0 - 1e-12)));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

/// Fraction of scores <= x.
inline double empirical_cdf(const ScoreSample& sample, double x)
{
    const auto sorted = sample.sorted();
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
    return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

/// Performance-profile polyline: q = k / n_points for k = 1..n_points.
inline std::vector<std::pair<double, double>> inverse_cdf_curve(const ScoreSample& sample,
                                                                std::size_t n_points)
{
    if (n_points < 2) {
        throw std::invalid_argument("inverse_cdf_curve needs at least 2 points");
    }
    std::vector<std::pair<double, double>> curve;
    curve.reserve(n_points);
    for (std::size_t k = 1; k <= n_points; ++k) {
        const double q = static_cast<double>(k) / static_cast<double>(n_points);
        curve.emplace_back(q, quantile(sample, q));
    }
    return curve;
}

inline double sample_mean(const ScoreSample& sample)
{
    const auto s = sample.scores();
    return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

inline double sample_std(const ScoreSample& sample)
{
    const auto s = sample.scores();
    if (s.size() < 2) {
        return 0.0;
    }
    const double mean = sample_mean(sample);
    double ss = 0.0;
    for (double v : s) {
        ss += (v - mean) * (v - mean);
    }
    return std::sqrt(ss / static_cast<double>(s.size() - 1));
}

inline SummaryStats summarize(const ScoreSample& sample, std::span<const double> quantile_list = {})
{
    SummaryStats out;
    out.n = sample.size();
    out.mean = sample_mean(sample);
    out.std = sample_std(sample);
    out.min = sample.sorted().front();
    out.max = sample.sorted().back();
    for (double q : quantile_list) {
        if (!(q >= 0.0 && q <= 1.0)) {
            throw std::domain_error("summary quantile must lie in [0, 1]");
        }
        // q = 0 reports the minimum, the limit of the order-statistic rule.
        out.quantiles.emplace_back(q, q == 0.0 ? out.min : quantile(sample, q));
    }
    return out;
}

/// "0.592±0.021" style, three decimals. Leading zeros are kept.
inline std::string format_mean_std(double mean, double std, int decimals = 3)
{
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.*f±%.*f", decimals, mean, decimals, std);
    return buf;
}

inline double silverman_bandwidth(const ScoreSample& sample)
{
    const double n = static_cast<double>(sample.size());
    const double sd = sample_std(sample);
    if (sd == 0.0) {
        // Constant sample: a bandwidth relative to the score's magnitude.
        const double scale = std::abs(sample_mean(sample));
        return 1e-6 * (scale > 0.0 ? scale : 1.0);
    }
    const double iqr = quantile(sample, 0.75) - quantile(sample, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    // Samples with a zero IQR but nonzero spread (a spike plus outliers) fall
    // back to the standard deviation.
    if (spread <= 0.0) {
        spread = sd;
    }
    return 0.9 * spread * std::pow(n, -0.2);
}

/// Gaussian-kernel density over a score sample.
struct Density {
    std::vector<double> centers;
    double bandwidth = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

inline Density make_density(std::vector<double> centers, double bandwidth)
{
    if (centers.empty()) {
        throw std::invalid_argument("empty sample");
    }
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        throw std::invalid_argument("bandwidth must be positive");
    }
    std::sort(centers.begin(), centers.end());
    Density d;
    d.lo = centers.front() - 4.0 * bandwidth;
    d.hi = centers.back() + 4.0 * bandwidth;
    d.bandwidth = bandwidth;
    d.centers = std::move(centers);
    return d;
}

inline Density fit_density(const ScoreSample& sample)
{
    const auto sorted = sample.sorted();
    return make_density({sorted.begin(), sorted.end()}, silverman_bandwidth(sample));
}

inline double kde_pdf(const Density& density, double x)
{
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    const double h = density.bandwidth;
    double sum = 0.0;
    for (double c : density.centers) {
        const double z = (x - c) / h;
        sum += std::exp(-0.5 * z * z);
    }
    return inv_sqrt_2pi * sum / (static_cast<double>(density.centers.size()) * h);
}

/// Uniform grid with `points` nodes spanning [lo, hi].
inline std::vector<double> uniform_grid(double lo, double hi, std::size_t points)
{
    std::vector<double> grid(points);
    const double step = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
        grid[i] = lo + step * static_cast<double>(i);
    }
    grid.back() = hi;
    return grid;
}

inline double trapezoid(std::span<const double> xs, std::span<const double> ys)
{
    double acc = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
        acc += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
    }
    return acc;
}

/// Trapezoid integral of the density over its own support.
inline double density_mass(const Density& density, std::size_t grid_points = 2048)
{
    const auto xs = uniform_grid(density.lo, density.hi, grid_points);
    std::vector<double> ys(xs.size());
    std::transform(xs.begin(), xs.end(), ys.begin(), [&](double x) { return kde_pdf(density, x); });
    return trapezoid(xs, ys);
}

inline constexpr std::size_t kDefaultKlGridPoints = 2048;
inline constexpr double kDefaultPdfFloor = 1e-12;

struct KlEstimate {
    double value = 0.0;  ///< clamped to [0, inf)
    double raw = 0.0;
    double bandwidth_p = 0.0;
    double bandwidth_q = 0.0;
    std::size_t grid_points = 0;
};

/// KL(P||Q) between Gaussian KDEs of the two samples, trapezoid rule on a
/// uniform grid over the union of both supports. Natural log.
inline KlEstimate kl_divergence_estimate(const ScoreSample& p, const ScoreSample& q,
                                         std::size_t grid_points = kDefaultKlGridPoints,
                                         double pdf_floor = kDefaultPdfFloor)
{
    if (grid_points < 64) {
        throw std::invalid_argument("kl_divergence needs at least 64 grid points");
    }
    if (!(pdf_floor > 0.0)) {
        throw std::invalid_argument("pdf_floor must be positive");
    }
    const Density dp = fit_density(p);
    const Density dq = fit_density(q);
    const auto xs = uniform_grid(std::min(dp.lo, dq.lo), std::max(dp.hi, dq.hi), grid_points);
    std::vector<double> integrand(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double px = kde_pdf(dp, xs[i]);
        const double qx = std::max(kde_pdf(dq, xs[i]), pdf_floor);
        integrand[i] = px > 0.0 ? px * std::log(px / qx) : 0.0;
    }
    KlEstimate out;
    out.raw = trapezoid(xs, integrand);
    out.value = std::max(0.0, out.raw);
    out.bandwidth_p = dp.bandwidth;
    out.bandwidth_q = dq.bandwidth;
    out.grid_points = grid_points;
    return out;
}

inline double kl_divergence(const ScoreSample& p, const ScoreSample& q,
                            std::size_t grid_points = kDefaultKlGridPoints,
                            double pdf_floor = kDefaultPdfFloor)
{
    return kl_divergence_estimate(p, q, grid_points, pdf_floor).value;
}

struct ComparisonReport {
    SummaryStats summary_p;
    SummaryStats summary_q;
    double kl_pq = 0.0;
    double kl_qp = 0.0;
    double kl_pq_raw = 0.0;
    double kl_qp_raw = 0.0;
    double bandwidth_p = 0.0;
    double bandwidth_q = 0.0;
    std::size_t grid_points = 0;
};

inline const std::vector<double>& default_report_quantiles()
{
    static const std::vector<double> deciles{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    return deciles;
}

inline ComparisonReport compare(const ScoreSample& p, const ScoreSample& q,
                                std::size_t grid_points = kDefaultKlGridPoints,
                                double pdf_floor = kDefaultPdfFloor)
{
    ComparisonReport r;
    r.summary_p = summarize(p, default_report_quantiles());
    r.summary_q = summarize(q, default_report_quantiles());
    const KlEstimate pq = kl_divergence_estimate(p, q, grid_points, pdf_floor);
    const KlEstimate qp = kl_divergence_estimate(q, p, grid_points, pdf_floor);
    r.kl_pq = pq.value;
    r.kl_qp = qp.value;
    r.kl_pq_raw = pq.raw;
    r.kl_qp_raw = qp.raw;
    r.bandwidth_p = pq.bandwidth_p;
    r.bandwidth_q = pq.bandwidth_q;
    r.grid_points = grid_points;
    return r;
}

namespace detail {

inline std::string fmt_real(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<std::pair<std::string, std::string>> flatten(const ComparisonReport& r)
{
    std::vector<std::pair<std::string, std::string>> kv;
    auto add_summary = [&](const std::string& prefix, const SummaryStats& s) {
        kv.emplace_back(prefix + "n", std::to_string(s.n));
        kv.emplace_back(prefix + "mean", fmt_real(s.mean));
        kv.emplace_back(prefix + "std", fmt_real(s.std));
        kv.emplace_back(prefix + "min", fmt_real(s.min));
        kv.emplace_back(prefix + "max", fmt_real(s.max));
        for (const auto& [q, v] : s.quantiles) {
            char key[32];
            std::snprintf(key, sizeof key, "q%g", q);
            kv.emplace_back(prefix + key, fmt_real(v));
        }
    };
    add_summary("p.", r.summary_p);
    add_summary("q.", r.summary_q);
    kv.emplace_back("kl_pq", fmt_real(r.kl_pq));
    kv.emplace_back("kl_qp", fmt_real(r.kl_qp));
    kv.emplace_back("bandwidth_p", fmt_real(r.bandwidth_p));
    kv.emplace_back("bandwidth_q", fmt_real(r.bandwidth_q));
    kv.emplace_back("grid_points", std::to_string(r.grid_points));
    return kv;
}

}  // namespace detail

/// Flat "key = value" block, one field per line.
inline std::string to_text(const ComparisonReport& r)
{
    std::string out;
    for (const auto& [k, v] : detail::flatten(r)) {
        out += k + " = " + v + "\n";
    }
    return out;
}

inline std::string csv_header(const ComparisonReport& r)
{
    std::string out;
    for (const auto& [k, v] : detail::flatten(r)) {
        out += (out.empty() ? "" : ",") + k;
    }
    return out;
}

inline std::string csv_row(const ComparisonReport& r)
{
    std::string out;
    bool first = true;
    for (const auto& [k, v] : detail::flatten(r)) {
        out += (first ? "" : ",") + v;
        first = false;
    }
    return out;
}

}  // namespace distro_eval
