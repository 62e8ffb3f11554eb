#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "besovkit/grid.hpp"

namespace besovkit {

constexpr double q_infinity = std::numeric_limits<double>::infinity();

/// Parameters (alpha, p, q) of b^alpha_{p,q} on a grid of dimension d.
/// q = q_infinity selects the supremum branch of the quasi-norm.
struct BesovParams {
    double alpha = 0.0;
    double p = 2.0;
    double q = 2.0;
    int d = 1;

    void validate() const
    {
        if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("BesovParams: p must be in (0,inf)");
        if (!(q > 0.0)) throw std::invalid_argument("BesovParams: q must be in (0,inf]");
        if (d < 1) throw std::invalid_argument("BesovParams: d must be >= 1");
    }
};

/// sigma_p = d * max{1/p - 1, 0}.
inline double sigma_p(double p, int d)
{
    if (!(p > 0.0)) throw std::invalid_argument("sigma_p: p must be positive");
    return d * std::max(1.0 / p - 1.0, 0.0);
}

/// Adaptivity scale: tau = (alpha_tau/d + 1/2)^{-1}.
inline double adaptivity_tau(double alpha_tau, int d)
{
    if (alpha_tau < 0.0) throw std::invalid_argument("adaptivity_tau: alpha_tau must be >= 0");
    return 1.0 / (alpha_tau / d + 0.5);
}

/// Inverse of the adaptivity scale: alpha_tau = d * (1/tau - 1/2).
inline double adaptivity_alpha(double tau, int d)
{
    if (!(tau > 0.0) || tau > 2.0)
        throw std::invalid_argument("adaptivity_alpha: tau must be in (0,2]");
    return d * (1.0 / tau - 0.5);
}

/// Sparse complex sequence indexed by a multiscale grid; absent keys are zero.
/// Entries are kept sorted by index within each level.
class CoeffSequence {
public:
    CoeffSequence() = default;

    explicit CoeffSequence(std::shared_ptr<const MultiscaleGrid> grid)
        : grid_(std::move(grid))
    {
        if (!grid_) throw std::invalid_argument("CoeffSequence: null grid");
        entries_.resize(grid_->levels.size());
    }

    const MultiscaleGrid& grid() const { return *grid_; }
    std::shared_ptr<const MultiscaleGrid> grid_ptr() const { return grid_; }

    int max_level() const { return static_cast<int>(entries_.size()) - 1; }

    void set(int j, std::uint32_t xi, Complex value)
    {
        auto& lvl = level_entries(j);
        if (xi >= grid_->level_size(j))
            throw std::out_of_range("CoeffSequence::set: index not in grid level");
        auto it = std::lower_bound(lvl.begin(), lvl.end(), xi,
                                   [](const auto& e, std::uint32_t k) { return e.first < k; });
        if (it != lvl.end() && it->first == xi)
            it->second = value;
        else
            lvl.insert(it, {xi, value});
    }

    Complex get(int j, std::uint32_t xi) const
    {
        if (j < 0 || j > max_level()) return 0.0;
        const auto& lvl = entries_[static_cast<std::size_t>(j)];
        auto it = std::lower_bound(lvl.begin(), lvl.end(), xi,
                                   [](const auto& e, std::uint32_t k) { return e.first < k; });
        if (it != lvl.end() && it->first == xi) return it->second;
        return 0.0;
    }

    const std::vector<std::pair<std::uint32_t, Complex>>& level(int j) const
    {
        return entries_.at(static_cast<std::size_t>(j));
    }

    std::vector<std::pair<std::uint32_t, Complex>>& level_entries(int j)
    {
        return entries_.at(static_cast<std::size_t>(j));
    }

    std::size_t support_size() const
    {
        std::size_t n = 0;
        for (const auto& lvl : entries_) n += lvl.size();
        return n;
    }

    /// Keep only levels <= J (view semantics are not needed; copies are cheap).
    CoeffSequence truncated(int J) const
    {
        CoeffSequence out(grid_);
        for (int j = 0; j <= std::min(J, max_level()); ++j)
            out.entries_[static_cast<std::size_t>(j)] = entries_[static_cast<std::size_t>(j)];
        return out;
    }

private:
    std::shared_ptr<const MultiscaleGrid> grid_;
    std::vector<std::vector<std::pair<std::uint32_t, Complex>>> entries_;
};

namespace detail {

/// ell_p of the magnitudes, summed in descending magnitude order.
inline double level_lp(const std::vector<std::pair<std::uint32_t, Complex>>& entries, double p)
{
    if (entries.empty()) return 0.0;
    std::vector<double> mags;
    mags.reserve(entries.size());
    for (const auto& e : entries) mags.push_back(std::abs(e.second));
    std::sort(mags.begin(), mags.end(), std::greater<double>());
    double sum = 0.0;
    for (const double m : mags) sum += std::pow(m, p);
    return std::pow(sum, 1.0 / p);
}

} // namespace detail

/// The b^alpha_{p,q} quasi-norm: level-wise ell_p norms weighted by
/// 2^{j(alpha + d[1/2 - 1/p])}, collected in ell_q over the levels.
inline double quasi_norm(const CoeffSequence& a, const BesovParams& prm)
{
    prm.validate();
    if (a.grid().d != prm.d)
        throw std::invalid_argument("quasi_norm: grid dimension does not match parameters");

    const double weight_exp = prm.alpha + prm.d * (0.5 - 1.0 / prm.p);
    if (std::isinf(prm.q)) {
        double sup = 0.0;
        for (int j = 0; j <= a.max_level(); ++j)
            sup = std::max(sup, std::pow(2.0, j * weight_exp) * detail::level_lp(a.level(j), prm.p));
        return sup;
    }
    std::vector<double> terms;
    for (int j = 0; j <= a.max_level(); ++j) {
        const double t = std::pow(2.0, j * weight_exp) * detail::level_lp(a.level(j), prm.p);
        if (t > 0.0) terms.push_back(t);
    }
    std::sort(terms.begin(), terms.end(), std::greater<double>());
    double sum = 0.0;
    for (const double t : terms) sum += std::pow(t, prm.q);
    return std::pow(sum, 1.0 / prm.q);
}

/// Embedding predicate of b^{alpha+gamma}_{p0,q0} into b^{alpha}_{p1,q1}:
/// gamma above the threshold d*max{0, 1/p0 - 1/p1}, or equal with q0 <= q1;
/// the unbounded regime additionally requires p0 <= p1.
inline bool embedding_exists(const BesovParams& from, const BesovParams& to, bool bounded)
{
    from.validate();
    to.validate();
    if (from.d != to.d) throw std::invalid_argument("embedding_exists: dimension mismatch");
    const double gamma = from.alpha - to.alpha;
    const double threshold = from.d * std::max(0.0, 1.0 / from.p - 1.0 / to.p);
    if (!bounded && from.p > to.p) return false;
    if (gamma > threshold) return true;
    if (gamma == threshold) return from.q <= to.q;
    return false;
}

/// Admissibility of (alpha,p,q): p < inf (bounded) resp. p <= 2 (unbounded),
/// and alpha > d*max{0,1/p-1/2}, or equality with q <= 2.
inline bool admissible_tuple(double alpha, double p, double q, int d, bool bounded)
{
    if (!(p > 0.0) || !(q > 0.0) || d < 1) return false;
    if (bounded) {
        if (!std::isfinite(p)) return false;
    } else {
        if (p > 2.0) return false;
    }
    const double threshold = d * std::max(0.0, 1.0 / p - 0.5);
    if (alpha > threshold) return true;
    if (alpha == threshold) return q <= 2.0;
    return false;
}

enum class HardyDirection { below, above };

/// ell_q over j of [ sum_{k<j} 2^{-delta (j-k) r} |x_k|^r ]^{1/r}
/// (direction `below`), or the k >= j variant with 2^{delta (j-k) r}
/// (direction `above`). Both are bounded by c * ||x||_{ell_q}.
inline double hardy_sums(const std::vector<double>& x, double delta, double r, double q,
                         HardyDirection direction)
{
    if (!(delta > 0.0)) throw std::invalid_argument("hardy_sums: delta must be positive");
    if (!(r > 0.0)) throw std::invalid_argument("hardy_sums: r must be positive");
    if (!(q > 0.0)) throw std::invalid_argument("hardy_sums: q must be in (0,inf]");
    const std::size_t n = x.size();
    std::vector<double> inner(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        if (direction == HardyDirection::below) {
            for (std::size_t k = 0; k < j; ++k)
                s += std::pow(2.0, -delta * static_cast<double>(j - k) * r) *
                     std::pow(std::abs(x[k]), r);
        } else {
            for (std::size_t k = j; k < n; ++k)
                s += std::pow(2.0, delta * (static_cast<double>(j) - static_cast<double>(k)) * r) *
                     std::pow(std::abs(x[k]), r);
        }
        inner[j] = std::pow(s, 1.0 / r);
    }
    if (std::isinf(q)) {
        double sup = 0.0;
        for (const double v : inner) sup = std::max(sup, v);
        return sup;
    }
    double sum = 0.0;
    for (const double v : inner) sum += std::pow(v, q);
    return std::pow(sum, 1.0 / q);
}

enum class CounterexampleKind {
    gamma_negative, // constant per level: 2^{-j(d/2 + alpha + gamma/2)}
    gamma_boundary, // one spike per level: 2^{-j(alpha+gamma+d[1/2-1/p0])} (1+j)^{-2/q0}
    unbounded_p     // level-0 tail (n+1)^{-1/p_bar} in ell_{p0} \ ell_{p1}
};

/// Materializes (truncated to the grid's levels) the sequences from the proof
/// of the standard-embedding characterization that witness its sharpness.
inline CoeffSequence counterexample_sequence(CounterexampleKind kind,
                                             std::shared_ptr<const MultiscaleGrid> grid,
                                             double alpha, double gamma, double p0, double q0,
                                             double p_bar = 1.0)
{
    CoeffSequence a(grid);
    const int d = grid->d;
    switch (kind) {
    case CounterexampleKind::gamma_negative: {
        for (int j = 0; j <= a.max_level(); ++j) {
            const double v = std::pow(2.0, -j * (d / 2.0 + alpha + gamma / 2.0));
            for (std::uint32_t xi = 0; xi < grid->level_size(j); ++xi)
                a.set(j, xi, v);
        }
        break;
    }
    case CounterexampleKind::gamma_boundary: {
        const double qexp = std::isinf(q0) ? 0.0 : 2.0 / q0;
        for (int j = 0; j <= a.max_level(); ++j) {
            if (grid->level_size(j) == 0) continue;
            const double v = std::pow(2.0, -j * (alpha + gamma + d * (0.5 - 1.0 / p0))) *
                             std::pow(1.0 + j, -qexp);
            a.set(j, 0, v);
        }
        break;
    }
    case CounterexampleKind::unbounded_p: {
        if (!(p_bar > 0.0)) throw std::invalid_argument("counterexample_sequence: bad p_bar");
        for (std::uint32_t n = 0; n < grid->level_size(0); ++n)
            a.set(0, n, std::pow(static_cast<double>(n) + 1.0, -1.0 / p_bar));
        break;
    }
    }
    return a;
}

} // namespace besovkit
