#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <tuple>
#include <vector>

#include "besovkit/admat.hpp"
#include "besovkit/seq.hpp"

namespace besovkit {

struct GreedyResult {
    std::vector<std::pair<int, std::uint32_t>> kept; // (level, index)
    double error = 0.0;
    // greedy-by-weighted-magnitude is the exact optimum for p = q; otherwise
    // the reported error is an upper bound on the best n-term error
    bool exact_optimum = false;
};

namespace detail {

inline double target_weight(const BesovParams& prm, int level)
{
    return std::pow(2.0, level * (prm.alpha + prm.d * (0.5 - 1.0 / prm.p)));
}

} // namespace detail

/// Keeps the n entries with largest weighted magnitude
/// 2^{j(alpha+d[1/2-1/p])} |a|; exact optimum for p = q by rearrangement.
/// The error is the quasi-norm of the remainder in `target`.
inline GreedyResult greedy_nterm(const CoeffSequence& a, const BesovParams& target,
                                 std::size_t n)
{
    target.validate();
    struct Item {
        double weighted;
        int level;
        std::uint32_t index;
    };
    std::vector<Item> items;
    for (int j = 0; j <= a.max_level(); ++j) {
        const double w = detail::target_weight(target, j);
        for (const auto& e : a.level(j)) items.push_back({w * std::abs(e.second), j, e.first});
    }
    std::sort(items.begin(), items.end(), [](const Item& x, const Item& y) {
        if (x.weighted != y.weighted) return x.weighted > y.weighted;
        if (x.level != y.level) return x.level < y.level;
        return x.index < y.index;
    });

    GreedyResult result;
    result.exact_optimum = target.p == target.q;
    CoeffSequence remainder = a;
    for (std::size_t i = 0; i < items.size() && i < n; ++i) {
        result.kept.emplace_back(items[i].level, items[i].index);
        remainder.set(items[i].level, items[i].index, 0.0);
    }
    result.error = quasi_norm(remainder, target);
    return result;
}

struct ErrorCurve {
    std::vector<std::pair<std::size_t, double>> points; // (n, error), n increasing
    BesovParams target;
    std::string source_label;
};

inline ErrorCurve error_curve(const CoeffSequence& a, const BesovParams& target,
                              const std::vector<std::size_t>& schedule,
                              const std::string& label = "")
{
    ErrorCurve curve;
    curve.target = target;
    curve.source_label = label;
    std::size_t prev = 0;
    bool first = true;
    for (std::size_t n : schedule) {
        if (!first && n <= prev) throw std::invalid_argument("error_curve: schedule not increasing");
        curve.points.emplace_back(n, greedy_nterm(a, target, n).error);
        prev = n;
        first = false;
    }
    // errors are nonincreasing by construction of the greedy remainder
    return curve;
}

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t n_min = 0;
    std::size_t n_max = 0;
};

/// Log-log least squares over [n_min, n_max]; zero bounds select the middle
/// two quartiles of log n (avoids preasymptotic and truncation-tail bias).
inline RateFit rate_fit(const ErrorCurve& curve, std::size_t n_min = 0, std::size_t n_max = 0)
{
    std::vector<std::pair<double, double>> pts; // (log n, log error)
    for (const auto& [n, err] : curve.points)
        if (n >= 1 && err > 0.0) pts.emplace_back(std::log2(static_cast<double>(n)), std::log2(err));
    if (pts.size() < 2) throw std::invalid_argument("rate_fit: not enough positive points");

    double lo = pts.front().first, hi = pts.back().first;
    if (n_min == 0 && n_max == 0) {
        const double span = hi - lo;
        lo += 0.25 * span;
        hi -= 0.25 * span;
    } else {
        lo = std::log2(static_cast<double>(std::max<std::size_t>(n_min, 1)));
        hi = std::log2(static_cast<double>(n_max));
    }

    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    int n = 0;
    std::size_t used_min = 0, used_max = 0;
    for (const auto& [x, y] : pts) {
        if (x < lo - 1e-12 || x > hi + 1e-12) continue;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        ++n;
        const auto nn = static_cast<std::size_t>(std::llround(std::pow(2.0, x)));
        if (used_min == 0) used_min = nn;
        used_max = nn;
    }
    if (n < 2) throw std::invalid_argument("rate_fit: window too narrow");
    RateFit fit;
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / n;
    const double ss_tot = syy - sy * sy / n;
    const double ss_res = ss_tot - fit.slope * (sxy - sx * sy / n);
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.n_min = used_min;
    fit.n_max = used_max;
    return fit;
}

struct RateExperimentReport {
    double predicted = 0.0; // -gamma/d, or -min{gamma/d, 1/q0-1/q1} at the threshold
    double mean_slope = 0.0;
    std::vector<double> slopes;
};

/// Samples sequences with unit source norm whose weighted magnitudes realize
/// the extremal flat rearrangement profile, measures greedy error slopes in
/// the target norm and compares against the predicted rate.
inline RateExperimentReport rate_experiment(const BesovParams& source, const BesovParams& target,
                                            std::shared_ptr<const MultiscaleGrid> grid,
                                            int trials, std::uint64_t seed = 123)
{
    if (!embedding_exists(source, target, /*bounded=*/true))
        throw std::invalid_argument("rate_experiment: no embedding for these parameters");
    const int d = grid->d;
    const double gamma = source.alpha - target.alpha;
    const double threshold = d * std::max(0.0, 1.0 / source.p - 1.0 / target.p);
    RateExperimentReport report;
    if (gamma > threshold) {
        report.predicted = -gamma / d;
    } else {
        const double q_rate = std::isinf(target.q)
                                  ? (std::isinf(source.q) ? 0.0 : 1.0 / source.q)
                                  : 1.0 / source.q - 1.0 / target.q;
        report.predicted = -std::min(gamma / d, q_rate);
    }

    const double w0 = source.alpha + d * (0.5 - 1.0 / source.p);
    for (int trial = 0; trial < trials; ++trial) {
        CoeffSequence a(grid);
        for (int j = 0; j <= grid->max_level(); ++j) {
            const std::size_t nj = grid->level_size(j);
            if (nj == 0) continue;
            const double cj =
                std::pow(2.0, -j * w0) * std::pow(static_cast<double>(nj), -1.0 / source.p);
            for (std::uint32_t i = 0; i < nj; ++i) {
                const double u = hashed_sign_value(seed + trial, j, 0, i, 1);
                a.set(j, i, cj * (0.5 + 0.5 * std::abs(u)));
            }
        }
        const double sn = quasi_norm(a, source);
        for (int j = 0; j <= grid->max_level(); ++j)
            for (auto& e : a.level_entries(j)) e.second /= sn;

        std::vector<std::size_t> schedule;
        const std::size_t total = a.support_size();
        for (std::size_t n = 1; n < total; n *= 2) schedule.push_back(n);
        auto curve = error_curve(a, target, schedule);
        report.slopes.push_back(rate_fit(curve).slope);
    }
    for (double s : report.slopes) report.mean_slope += s;
    if (!report.slopes.empty()) report.mean_slope /= static_cast<double>(report.slopes.size());
    return report;
}

/// DeVore-Triebel diagram data: the queried (1/p, alpha) points with flags,
/// the adaptivity line, and the admissibility boundary, as CSV text.
inline std::string diagram_export(const std::vector<BesovParams>& params, int d)
{
    std::string csv = "kind,inv_p,alpha,q,admissible,on_adaptivity_scale\n";
    if (params.empty()) return csv;
    char buf[256];
    auto emit = [&](const char* kind, double inv_p, double alpha, double q, int adm, int on_line) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%d,%d\n", kind, inv_p, alpha, q, adm,
                      on_line);
        csv += buf;
    };
    emit("anchor", 0.5, 0.0, 2.0, 1, 1); // L2 = B^0_{2,2}
    double alpha_max = 1.0;
    for (const auto& prm : params) alpha_max = std::max(alpha_max, prm.alpha + 1.0);
    for (const auto& prm : params) {
        const bool adm = admissible_tuple(prm.alpha, prm.p, prm.q, d, true);
        const bool on_line =
            std::abs(prm.alpha - d * (1.0 / prm.p - 0.5)) < 1e-12 && prm.alpha >= 0.0;
        emit("point", 1.0 / prm.p, prm.alpha, prm.q, adm ? 1 : 0, on_line ? 1 : 0);
    }
    for (int i = 0; i <= 32; ++i) {
        const double at = alpha_max * i / 32.0;
        emit("adaptivity-line", at / d + 0.5, at, 1.0 / (at / d + 0.5), 1, 1);
    }
    for (int i = 0; i <= 32; ++i) {
        const double inv_p = 2.0 * alpha_max * i / (32.0 * d) + 0.0;
        const double boundary = d * std::max(0.0, inv_p - 0.5);
        emit("admissible-boundary", inv_p, boundary, 2.0, 1, 0);
    }
    return csv;
}

} // namespace besovkit
