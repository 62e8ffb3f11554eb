#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

#include "besovkit/seq.hpp"

namespace besovkit {

/// Parameters of the almost-diagonal class ad^{alpha0,alpha1}_p(epsilon).
struct AdParams {
    double alpha0 = 0.0;
    double alpha1 = 0.0;
    double p = 2.0;
    double epsilon = 0.5;
    int d = 1;

    void validate() const
    {
        if (!(epsilon > 0.0)) throw std::invalid_argument("AdParams: epsilon must be positive");
        if (!(p > 0.0) || !std::isfinite(p))
            throw std::invalid_argument("AdParams: p must be in (0,inf)");
        if (d < 1) throw std::invalid_argument("AdParams: d >= 1");
    }
};

/// The weight omega_{(j,xi),(k,eta)}(epsilon):
///   2^{k a0 - j a1} min{2^{-(j-k)(d/2+eps)}, 2^{(j-k)(d/2+eps+sigma_p)}}
///   / [1 + min{2^k, 2^j} dist(xi,eta)]^{d+eps+sigma_p}.
inline double omega(int j, const IndexPoint& xi, int k, const IndexPoint& eta,
                    const AdParams& prm)
{
    prm.validate();
    const double sp = sigma_p(prm.p, prm.d);
    const double level_factor = std::pow(2.0, k * prm.alpha0 - j * prm.alpha1);
    const double off = static_cast<double>(j - k);
    const double decay = std::min(std::pow(2.0, -off * (prm.d / 2.0 + prm.epsilon)),
                                  std::pow(2.0, off * (prm.d / 2.0 + prm.epsilon + sp)));
    const double scale = std::pow(2.0, std::min(j, k));
    const double dist = pseudo_dist(xi, eta);
    const double denom = std::pow(1.0 + scale * dist, prm.d + prm.epsilon + sp);
    return level_factor * decay / denom;
}

/// Level-block sparse matrix between two multiscale grids.
/// Rows are indexed by nabla^1 (the row grid), columns by nabla^0.
class ScaleMatrix {
public:
    struct Triplet {
        std::uint32_t row = 0; // xi index within row level j
        std::uint32_t col = 0; // eta index within col level k
        Complex value;
    };
    using BlockKey = std::pair<int, int>; // (j, k)

    ScaleMatrix() = default;
    ScaleMatrix(std::shared_ptr<const MultiscaleGrid> row_grid,
                std::shared_ptr<const MultiscaleGrid> col_grid)
        : row_grid_(std::move(row_grid)), col_grid_(std::move(col_grid))
    {
        if (!row_grid_ || !col_grid_) throw std::invalid_argument("ScaleMatrix: null grid");
    }

    const MultiscaleGrid& row_grid() const { return *row_grid_; }
    const MultiscaleGrid& col_grid() const { return *col_grid_; }
    std::shared_ptr<const MultiscaleGrid> row_grid_ptr() const { return row_grid_; }
    std::shared_ptr<const MultiscaleGrid> col_grid_ptr() const { return col_grid_; }

    void add(int j, int k, std::uint32_t row, std::uint32_t col, Complex value)
    {
        if (j < 0 || j > row_grid_->max_level() || row >= row_grid_->level_size(j))
            throw std::out_of_range("ScaleMatrix::add: row index outside grid");
        if (k < 0 || k > col_grid_->max_level() || col >= col_grid_->level_size(k))
            throw std::out_of_range("ScaleMatrix::add: column index outside grid");
        blocks_[{j, k}].push_back({row, col, value});
    }

    /// Sort triplets within each block by (row, col); required before apply.
    void finalize()
    {
        for (auto& [key, trips] : blocks_)
            std::sort(trips.begin(), trips.end(), [](const Triplet& a, const Triplet& b) {
                return a.row != b.row ? a.row < b.row : a.col < b.col;
            });
    }

    const std::map<BlockKey, std::vector<Triplet>>& blocks() const { return blocks_; }
    std::map<BlockKey, std::vector<Triplet>>& blocks_mutable() { return blocks_; }

    std::size_t nnz() const
    {
        std::size_t n = 0;
        for (const auto& [key, trips] : blocks_) n += trips.size();
        return n;
    }

    Complex get(int j, int k, std::uint32_t row, std::uint32_t col) const
    {
        auto it = blocks_.find({j, k});
        if (it == blocks_.end()) return 0.0;
        for (const auto& t : it->second)
            if (t.row == row && t.col == col) return t.value;
        return 0.0;
    }

private:
    std::shared_ptr<const MultiscaleGrid> row_grid_;
    std::shared_ptr<const MultiscaleGrid> col_grid_;
    std::map<BlockKey, std::vector<Triplet>> blocks_;
};

struct AdMembershipReport {
    double sup_ratio = 0.0;
    int witness_j = -1;
    int witness_k = -1;
    std::uint32_t witness_row = 0;
    std::uint32_t witness_col = 0;
};

/// sup over stored entries of |m| / omega. Exact on finite grids.
inline AdMembershipReport ad_membership(const ScaleMatrix& M, const AdParams& prm)
{
    prm.validate();
    if (M.row_grid().d != prm.d || M.col_grid().d != prm.d)
        throw std::invalid_argument("ad_membership: grid/parameter dimension mismatch");
    AdMembershipReport report;
    for (const auto& [key, trips] : M.blocks()) {
        const auto [j, k] = key;
        for (const auto& t : trips) {
            const double w = omega(j, M.row_grid().at(j, t.row), k, M.col_grid().at(k, t.col), prm);
            const double ratio = std::abs(t.value) / w;
            if (ratio > report.sup_ratio) {
                report.sup_ratio = ratio;
                report.witness_j = j;
                report.witness_k = k;
                report.witness_row = t.row;
                report.witness_col = t.col;
            }
        }
    }
    return report;
}

/// Largest epsilon in (0, eps_max] with sup_ratio <= cap. Monotone in epsilon
/// on finite data, so plain bisection applies.
inline double ad_fit_epsilon(const ScaleMatrix& M, double alpha0, double alpha1, double p,
                             double cap, double eps_max = 4.0, double tol = 1e-3)
{
    AdParams prm{alpha0, alpha1, p, eps_max, M.row_grid().d};
    if (ad_membership(M, prm).sup_ratio <= cap) return eps_max;
    double lo = 0.0, hi = eps_max;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        prm.epsilon = mid;
        if (ad_membership(M, prm).sup_ratio <= cap)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

enum class SplitPart { lower, upper }; // lower: k < j, upper: k >= j

namespace detail {

inline void check_apply_compat(const ScaleMatrix& M, const CoeffSequence& a)
{
    const auto& cg = M.col_grid();
    const auto& ag = a.grid();
    if (cg.domain != ag.domain || cg.levels.size() != ag.levels.size())
        throw std::invalid_argument("apply: sequence is not indexed by the column grid");
}

inline CoeffSequence apply_part(const ScaleMatrix& M, const CoeffSequence& a, SplitPart part)
{
    check_apply_compat(M, a);
    CoeffSequence out(M.row_grid_ptr());
    const int jmax = M.row_grid().max_level();
    for (int j = 0; j <= jmax; ++j) {
        std::vector<Complex> acc(M.row_grid().level_size(j), Complex(0.0, 0.0));
        bool touched = false;
        for (const auto& [key, trips] : M.blocks()) {
            if (key.first != j) continue;
            const int k = key.second;
            if (part == SplitPart::lower && !(k < j)) continue;
            if (part == SplitPart::upper && !(k >= j)) continue;
            if (k > a.max_level()) continue;
            for (const auto& t : trips) {
                const Complex av = a.get(k, t.col);
                if (av != Complex(0.0, 0.0)) {
                    acc[t.row] += t.value * av;
                    touched = true;
                }
            }
        }
        if (touched)
            for (std::uint32_t i = 0; i < acc.size(); ++i)
                if (acc[i] != Complex(0.0, 0.0)) out.set(j, i, acc[i]);
    }
    return out;
}

} // namespace detail

/// (M a)_{(j,xi)} = sum_{(k,eta)} m a_{(k,eta)}, accumulated as the lower
/// (k < j) and upper (k >= j) parts so that apply == lower + upper exactly.
inline CoeffSequence apply(const ScaleMatrix& M, const CoeffSequence& a)
{
    CoeffSequence lower = detail::apply_part(M, a, SplitPart::lower);
    CoeffSequence upper = detail::apply_part(M, a, SplitPart::upper);
    CoeffSequence out(M.row_grid_ptr());
    for (int j = 0; j <= out.max_level(); ++j) {
        for (const auto& e : lower.level(j)) out.set(j, e.first, e.second);
        for (const auto& e : upper.level(j))
            out.set(j, e.first, out.get(j, e.first) + e.second);
    }
    return out;
}

/// The M^- / M^+ split from the boundedness proof: M^- sums k < j, M^+ k >= j.
inline std::pair<CoeffSequence, CoeffSequence> apply_split(const ScaleMatrix& M,
                                                           const CoeffSequence& a)
{
    return {detail::apply_part(M, a, SplitPart::lower),
            detail::apply_part(M, a, SplitPart::upper)};
}

/// Dense nonnegative kernel block K[row=output][col=input].
struct DenseKernel {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values; // row-major

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Schur-type bound C1^{1/p} C2^{1/p'} with C1 = sup over inputs of the
/// output sums and C2 = sup over outputs of the input sums (counting measure).
inline double schur_bound(const DenseKernel& K, double p)
{
    if (!(p >= 1.0)) throw std::invalid_argument("schur_bound: requires 1 <= p <= inf");
    double c1 = 0.0;
    for (std::size_t c = 0; c < K.cols; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < K.rows; ++r) s += std::abs(K.at(r, c));
        c1 = std::max(c1, s);
    }
    double c2 = 0.0;
    for (std::size_t r = 0; r < K.rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < K.cols; ++c) s += std::abs(K.at(r, c));
        c2 = std::max(c2, s);
    }
    if (std::isinf(p)) return c2;
    const double ip = 1.0 / p;
    return std::pow(c1, ip) * std::pow(c2, 1.0 - ip);
}

/// Kernel K^-_{j,k,eps}(xi,eta) = [1 + 2^k dist(xi,eta)]^{-(d+eps)} between
/// level j of the row grid and level k of the column grid. `use_fine_scale`
/// swaps in 2^j for the K^+ variant.
inline DenseKernel level_kernel(const MultiscaleGrid& row_grid, int j,
                                const MultiscaleGrid& col_grid, int k, double eps,
                                bool use_fine_scale = false)
{
    DenseKernel K;
    K.rows = row_grid.level_size(j);
    K.cols = col_grid.level_size(k);
    K.values.assign(K.rows * K.cols, 0.0);
    const double scale = std::pow(2.0, use_fine_scale ? j : k);
    const double s = row_grid.d + eps;
    for (std::size_t r = 0; r < K.rows; ++r)
        for (std::size_t c = 0; c < K.cols; ++c) {
            const double dist =
                pseudo_dist(row_grid.at(j, static_cast<std::size_t>(r)),
                            col_grid.at(k, static_cast<std::size_t>(c)));
            K.at(r, c) = std::pow(1.0 + scale * dist, -s);
        }
    return K;
}

/// ell_p -> ell_p operator norm of a dense nonnegative kernel, estimated from
/// below by extremal and random probes.
inline double kernel_norm_lower_bound(const DenseKernel& K, double p, int trials,
                                      std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto ratio = [&](const std::vector<double>& x) {
        double xn = 0.0, yn = 0.0;
        std::vector<double> y(K.rows, 0.0);
        for (std::size_t r = 0; r < K.rows; ++r)
            for (std::size_t c = 0; c < K.cols; ++c) y[r] += K.at(r, c) * x[c];
        if (std::isinf(p)) {
            for (double v : x) xn = std::max(xn, std::abs(v));
            for (double v : y) yn = std::max(yn, std::abs(v));
        } else {
            for (double v : x) xn += std::pow(std::abs(v), p);
            for (double v : y) yn += std::pow(std::abs(v), p);
            xn = std::pow(xn, 1.0 / p);
            yn = std::pow(yn, 1.0 / p);
        }
        return xn > 0.0 ? yn / xn : 0.0;
    };

    double best = 0.0;
    std::vector<double> x(K.cols, 1.0);
    best = std::max(best, ratio(x)); // attains C2 at p = inf for K >= 0
    for (std::size_t c = 0; c < K.cols; ++c) {
        std::fill(x.begin(), x.end(), 0.0);
        x[c] = 1.0;
        best = std::max(best, ratio(x)); // attains C1 at p = 1
    }
    for (int t = 0; t < trials; ++t) {
        for (auto& v : x) v = unif(rng);
        best = std::max(best, ratio(x));
    }
    return best;
}

/// Deterministic per-entry value in [-1,1] from a counter-based hash, so that
/// matrices built on nested grids are truncations of one infinite matrix.
inline double hashed_sign_value(std::uint64_t seed, int j, int k, std::uint32_t r,
                                std::uint32_t c)
{
    std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ull;
    for (std::uint64_t x : {static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(k),
                            static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c)}) {
        h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        h *= 0xff51afd7ed558ccdull;
        h ^= h >> 33;
    }
    return 2.0 * (static_cast<double>(h >> 11) * 0x1.0p-53) - 1.0;
}

/// Random unit-quasi-norm input: per-level random signs and magnitudes,
/// rescaled so every level contributes equally to the `from` norm. Entries
/// come from the counter hash, so draws on nested grids are truncations of
/// one another.
inline CoeffSequence random_unit_input(std::shared_ptr<const MultiscaleGrid> grid,
                                       const BesovParams& from, std::uint64_t seed)
{
    CoeffSequence a(grid);
    const double wexp = from.alpha + from.d * (0.5 - 1.0 / from.p);
    for (int k = 0; k <= grid->max_level(); ++k) {
        const std::size_t n = grid->level_size(k);
        if (n == 0) continue;
        std::vector<double> vals(n);
        double lp = 0.0;
        for (std::uint32_t i = 0; i < n; ++i) {
            const double u = hashed_sign_value(seed, k, 1, i, 0);
            vals[i] = (u >= 0.0 ? 1.0 : -1.0) * (0.5 + 0.5 * std::abs(u));
            lp += std::pow(std::abs(vals[i]), from.p);
        }
        lp = std::pow(lp, 1.0 / from.p);
        const double scale = 1.0 / (std::pow(2.0, k * wexp) * lp);
        for (std::uint32_t i = 0; i < n; ++i) a.set(k, i, vals[i] * scale);
    }
    return a;
}

/// Lower bound on the operator norm b^{from} -> b^{to}: max quasi-norm ratio
/// over `trials` random unit-quasi-norm inputs with the recorded seed.
inline double empirical_operator_norm(const ScaleMatrix& M, const BesovParams& from,
                                      const BesovParams& to, int trials,
                                      std::uint64_t seed = 42)
{
    auto cg = M.col_grid_ptr();
    double best = 0.0;
    for (int t = 0; t < trials; ++t) {
        const CoeffSequence a = random_unit_input(cg, from, seed * 1000 + t);
        const double an = quasi_norm(a, from);
        if (an <= 0.0) continue;
        best = std::max(best, quasi_norm(apply(M, a), to) / an);
    }
    return best;
}

/// Identity matrix on a grid.
inline ScaleMatrix identity_matrix(std::shared_ptr<const MultiscaleGrid> g)
{
    ScaleMatrix M(g, g);
    for (int j = 0; j <= g->max_level(); ++j)
        for (std::uint32_t i = 0; i < g->level_size(j); ++i) M.add(j, j, i, i, 1.0);
    M.finalize();
    return M;
}

/// Diagonal matrix with entries 2^{j * gamma}.
inline ScaleMatrix diagonal_scaling_matrix(std::shared_ptr<const MultiscaleGrid> g, double gamma)
{
    ScaleMatrix M(g, g);
    for (int j = 0; j <= g->max_level(); ++j)
        for (std::uint32_t i = 0; i < g->level_size(j); ++i)
            M.add(j, j, i, i, std::pow(2.0, j * gamma));
    M.finalize();
    return M;
}

/// Matrix with |entries| = omega(eps) scaled by `value(j,k,row,col)`; entries
/// whose weight falls below cutoff_rel times the block maximum are dropped at
/// generation time (the weight controls the discarded mass).
template <typename ValueFn>
ScaleMatrix omega_matrix(std::shared_ptr<const MultiscaleGrid> row_grid,
                         std::shared_ptr<const MultiscaleGrid> col_grid, const AdParams& prm,
                         ValueFn&& value, double cutoff_rel = 1e-14)
{
    prm.validate();
    ScaleMatrix M(row_grid, col_grid);
    const double sp = sigma_p(prm.p, prm.d);
    for (int j = 0; j <= row_grid->max_level(); ++j)
        for (int k = 0; k <= col_grid->max_level(); ++k) {
            const double off = static_cast<double>(j - k);
            const double block_max =
                std::pow(2.0, k * prm.alpha0 - j * prm.alpha1) *
                std::min(std::pow(2.0, -off * (prm.d / 2.0 + prm.epsilon)),
                         std::pow(2.0, off * (prm.d / 2.0 + prm.epsilon + sp)));
            const double cutoff = cutoff_rel * block_max;
            for (std::uint32_t r = 0; r < row_grid->level_size(j); ++r)
                for (std::uint32_t c = 0; c < col_grid->level_size(k); ++c) {
                    const double w = omega(j, row_grid->at(j, r), k, col_grid->at(k, c), prm);
                    if (w < cutoff) continue;
                    M.add(j, k, r, c, w * value(j, k, r, c));
                }
        }
    M.finalize();
    return M;
}

} // namespace besovkit
