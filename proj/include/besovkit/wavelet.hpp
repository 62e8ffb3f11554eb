#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "besovkit/seq.hpp"
#include "besovkit/univariate.hpp"

namespace besovkit {

/// Coefficient vector of a univariate 1-periodic function w.r.t. the integer
/// shifts of a refinable function at scale L: f(x) = sum_m c[m] b(2^L x - m),
/// shifts taken mod 2^L.
struct LineFn {
    int scale = 0;
    std::vector<double> c; // size 2^scale

    static LineFn delta(int scale, int shift, double value)
    {
        LineFn f;
        f.scale = scale;
        f.c.assign(std::size_t{1} << scale, 0.0);
        const int period = 1 << scale;
        f.c[static_cast<std::size_t>(((shift % period) + period) % period)] = value;
        return f;
    }

    /// Apply `mask` as a two-scale relation, raising the scale by one.
    LineFn refined(const Mask& mask) const
    {
        LineFn out;
        out.scale = scale + 1;
        const int period = 1 << out.scale;
        out.c.assign(static_cast<std::size_t>(period), 0.0);
        for (int m = 0; m < (1 << scale); ++m) {
            const double v = c[static_cast<std::size_t>(m)];
            if (v == 0.0) continue;
            for (int h = mask.lo(); h <= mask.hi(); ++h) {
                const int n = (((2 * m + h) % period) + period) % period;
                out.c[static_cast<std::size_t>(n)] += v * mask.at(h);
            }
        }
        return out;
    }
};

/// <f, g> over [0,1] where f, g are LineFns at equal scale over bases with
/// integer-shift correlations `corr` (corr(r) = int b_f(x) b_g(x-r) dx).
inline double line_inner(const LineFn& f, const LineFn& g, const Mask& corr)
{
    if (f.scale != g.scale) throw std::invalid_argument("line_inner: scale mismatch");
    const int period = 1 << f.scale;
    const double scale_factor = std::pow(2.0, -f.scale);
    double acc = 0.0;
    for (int m = 0; m < period; ++m) {
        const double v = f.c[static_cast<std::size_t>(m)];
        if (v == 0.0) continue;
        for (int r = corr.lo(); r <= corr.hi(); ++r) {
            const int n = (((m + r) % period) + period) % period;
            acc += v * corr.at(r) * g.c[static_cast<std::size_t>(n)];
        }
    }
    return acc * scale_factor;
}

/// Univariate factor of a tensor wavelet: scaling or wavelet at a scale.
enum class AxisKind { scaling, wavelet };

/// phi^per_{s,k} (or psi^per_{s,k}) as a LineFn at scale `target` (>= natural
/// scale), primal or dual side. The 2^{s/2} normalization is included.
inline LineFn axis_line_fn(const UnivariateSystem& uni, AxisKind kind, int s, int k, int target,
                           bool dual)
{
    const Mask& refine = dual ? uni.h_dual() : uni.h();
    LineFn f;
    if (kind == AxisKind::scaling) {
        f = LineFn::delta(s, k, std::pow(2.0, 0.5 * s));
    } else {
        // psi_{s,k} = 2^{s/2} sum_m g_{m-2k} theta(2^{s+1} x - m)
        const Mask& wav = dual ? uni.g_dual() : uni.g();
        f.scale = s + 1;
        const int period = 1 << (s + 1);
        f.c.assign(static_cast<std::size_t>(period), 0.0);
        const double amp = std::pow(2.0, 0.5 * s);
        for (int m = wav.lo(); m <= wav.hi(); ++m) {
            const int n = (((2 * k + m) % period) + period) % period;
            f.c[static_cast<std::size_t>(n)] += amp * wav.at(m);
        }
    }
    while (f.scale < target) f = f.refined(refine);
    if (f.scale != target) throw std::invalid_argument("axis_line_fn: target below natural scale");
    return f;
}

namespace detail {

/// Filter along axis 0 of a rows x cols row-major field: (rows/2) x cols out.
template <typename T>
std::vector<T> filt_rows(const std::vector<T>& in, int rows, int cols, const Mask& mask)
{
    const int out_rows = rows / 2;
    std::vector<T> out(static_cast<std::size_t>(out_rows) * cols, T{});
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int kc = 0; kc < out_rows; ++kc)
        for (int m = mask.lo(); m <= mask.hi(); ++m) {
            const double w = inv_sqrt2 * mask.at(m);
            if (w == 0.0) continue;
            const int r = (((2 * kc + m) % rows) + rows) % rows;
            for (int j = 0; j < cols; ++j)
                out[static_cast<std::size_t>(kc) * cols + j] +=
                    w * in[static_cast<std::size_t>(r) * cols + j];
        }
    return out;
}

/// Filter along axis 1: rows x cols -> rows x (cols/2).
template <typename T>
std::vector<T> filt_cols(const std::vector<T>& in, int rows, int cols, const Mask& mask)
{
    const int out_cols = cols / 2;
    std::vector<T> out(static_cast<std::size_t>(rows) * out_cols, T{});
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int kc = 0; kc < out_cols; ++kc)
        for (int m = mask.lo(); m <= mask.hi(); ++m) {
            const double w = inv_sqrt2 * mask.at(m);
            if (w == 0.0) continue;
            const int r = (((2 * kc + m) % cols) + cols) % cols;
            for (int i = 0; i < rows; ++i)
                out[static_cast<std::size_t>(i) * out_cols + kc] +=
                    w * in[static_cast<std::size_t>(i) * cols + r];
        }
    return out;
}

/// Inverse of filt_rows: accumulate coarse (rows x cols) into fine (2rows x cols).
template <typename T>
void up_rows(std::vector<T>& fine, const std::vector<T>& coarse, int coarse_rows, int cols,
             const Mask& mask)
{
    const int fine_rows = 2 * coarse_rows;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int kc = 0; kc < coarse_rows; ++kc)
        for (int m = mask.lo(); m <= mask.hi(); ++m) {
            const double w = inv_sqrt2 * mask.at(m);
            if (w == 0.0) continue;
            const int r = (((2 * kc + m) % fine_rows) + fine_rows) % fine_rows;
            for (int j = 0; j < cols; ++j)
                fine[static_cast<std::size_t>(r) * cols + j] +=
                    w * coarse[static_cast<std::size_t>(kc) * cols + j];
        }
}

/// Inverse of filt_cols: accumulate coarse (rows x cols) into fine (rows x 2cols).
template <typename T>
void up_cols(std::vector<T>& fine, const std::vector<T>& coarse, int rows, int coarse_cols,
             const Mask& mask)
{
    const int fine_cols = 2 * coarse_cols;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int kc = 0; kc < coarse_cols; ++kc)
        for (int m = mask.lo(); m <= mask.hi(); ++m) {
            const double w = inv_sqrt2 * mask.at(m);
            if (w == 0.0) continue;
            const int r = (((2 * kc + m) % fine_cols) + fine_cols) % fine_cols;
            for (int i = 0; i < rows; ++i)
                fine[static_cast<std::size_t>(i) * fine_cols + r] +=
                    w * coarse[static_cast<std::size_t>(i) * coarse_cols + kc];
        }
}

} // namespace detail

struct WaveletIndex {
    int patch = 0;
    int type = 0;                 // 0 = scaling block (level 0), else corner bits
    std::array<int, 3> k{0, 0, 0};
};

struct MomentsReport {
    double max_abs_primal = 0.0;       // vs degrees < D_dual, non-wrapping wavelets
    double max_abs_dual = 0.0;         // vs degrees < D
    double first_nonzero_primal = 0.0; // at degree D_dual
    int n_checked = 0;
    int n_skipped_wrapping = 0;
    bool ok = false;
};

struct SupportReport {
    // per level j >= 1: diam(supp) * 2^j in the patch-local periodic metric
    std::vector<double> scaled_diam;
    bool anchors_contained = false;
    double c_upper = 0.0;
    bool ok = false;
};

struct DecayFit {
    double rho = 0.0; // fitted exponent in max|<f,psi~_{j,.}>| ~ C 2^{-j rho}
    double s_required = 0.0;
    std::vector<double> level_max;
    bool all_zero = false;
    bool ok = false; // rho >= s - 0.25
};

/// Patchwise periodized tensor-spline wavelet system on a decomposable
/// manifold. Level 0 carries the scaling functions of the first refinement
/// step; level j >= 1 carries the 2^d - 1 tensor wavelet types at scale j.
/// Primal/dual pairs are balanced so both sides have equal L2 norms.
class WaveletSystem {
public:
    WaveletSystem(std::shared_ptr<const UnivariateSystem> uni,
                  std::shared_ptr<const Decomposition> dec, int max_level)
        : uni_(std::move(uni)), dec_(std::move(dec)), J_(max_level)
    {
        if (!uni_ || !dec_) throw std::invalid_argument("WaveletSystem: null input");
        if (J_ < 1) throw std::invalid_argument("WaveletSystem: max_level >= 1");
        if (dec_->d > 2) throw std::invalid_argument("WaveletSystem: d <= 2 supported");
        build_normalization();
        build_grid();
    }

    const UnivariateSystem& univariate() const { return *uni_; }
    std::shared_ptr<const UnivariateSystem> univariate_ptr() const { return uni_; }
    const Decomposition& decomposition() const { return *dec_; }
    std::shared_ptr<const Decomposition> decomposition_ptr() const { return dec_; }
    int max_level() const { return J_; }
    int dim() const { return dec_->d; }

    std::shared_ptr<const MultiscaleGrid> grid_ptr() const { return grid_; }
    const MultiscaleGrid& grid() const { return *grid_; }
    const WaveletIndex& index(int level, std::uint32_t flat) const
    {
        return index_[static_cast<std::size_t>(level)][flat];
    }
    std::uint32_t flat_index(int level, const WaveletIndex& wi) const;

    /// Periodized univariate L2 norms at a scale (same for every shift).
    double axis_norm(AxisKind kind, int s, bool dual) const
    {
        const auto& tbl = dual ? (kind == AxisKind::scaling ? norm_d_scal_ : norm_d_wav_)
                               : (kind == AxisKind::scaling ? norm_p_scal_ : norm_p_wav_);
        return tbl[static_cast<std::size_t>(s)];
    }

    /// Balancing constant per axis factor: normalized primal = c * primal,
    /// normalized dual = dual / c, giving both norm sqrt(|primal| |dual|).
    double axis_balance(AxisKind kind, int s) const
    {
        return std::sqrt(axis_norm(kind, s, true) / axis_norm(kind, s, false));
    }

    double balance_constant(int level, int type) const
    {
        double c = 1.0;
        for (int ax = 0; ax < dim(); ++ax)
            c *= axis_balance(axis_kind(level, type, ax), axis_scale(level));
        return c;
    }

    /// L2 norm of the normalized primal (== dual) function at (level, type).
    double normalized_l2_norm(int level, int type) const
    {
        double n = 1.0;
        for (int ax = 0; ax < dim(); ++ax) {
            const AxisKind kind = axis_kind(level, type, ax);
            const int s = axis_scale(level);
            n *= std::sqrt(axis_norm(kind, s, true) * axis_norm(kind, s, false));
        }
        return n;
    }

    int axis_scale(int level) const { return level == 0 ? 1 : level; }
    AxisKind axis_kind(int level, int type, int axis) const
    {
        if (level == 0) return AxisKind::scaling;
        return ((type >> axis) & 1) ? AxisKind::wavelet : AxisKind::scaling;
    }

    /// Partial-sum field: scaling coefficients at scale J+1 per patch.
    struct SplineField {
        std::shared_ptr<const UnivariateSystem> uni;
        std::shared_ptr<const Decomposition> dec;
        int scale = 0;
        std::vector<std::vector<Complex>> patch_coeffs; // per patch, (2^L)^d

        Complex eval(int patch, const std::array<double, 3>& x) const;
        PatchFunction as_patch_function() const
        {
            auto self = std::make_shared<SplineField>(*this);
            return PatchFunction(
                [self](int p, const std::array<double, 3>& x) { return self->eval(p, x); });
        }
    };

    /// Coefficients <u, psi~_{j,xi}> for all levels <= J via dual-moment
    /// quadrature at scale J+1+oversample and the periodized filter bank.
    CoeffSequence analyze(const PatchFunction& u, int J, int oversample = 2) const;

    SplineField synthesize(const CoeffSequence& a, int J) const;

    /// Exact analysis of a field already given in the scaling basis.
    CoeffSequence analyze_field(const SplineField& u, int J) const;

    /// L2(Gamma) norm of a field (exact, via the scaling Gramian).
    double field_l2_norm(const SplineField& u) const;

    MomentsReport moments_check(int degree_max) const;
    SupportReport support_check(double threshold = 1e-10) const;
    DecayFit coefficient_decay_check(const PatchFunction& f, double s, int oversample = 2) const;

private:
    void build_normalization();
    void build_grid();
    void check_sequence(const CoeffSequence& a) const
    {
        if (a.grid().domain != grid_->domain || a.grid().levels.size() != grid_->levels.size())
            throw std::invalid_argument("WaveletSystem: sequence not indexed by this system");
    }

    std::shared_ptr<const UnivariateSystem> uni_;
    std::shared_ptr<const Decomposition> dec_;
    int J_;
    std::shared_ptr<const MultiscaleGrid> grid_;
    std::vector<std::vector<WaveletIndex>> index_;
    std::vector<double> norm_p_scal_, norm_p_wav_, norm_d_scal_, norm_d_wav_;
};

inline void WaveletSystem::build_normalization()
{
    const int smax = J_ + 1;
    norm_p_scal_.assign(static_cast<std::size_t>(smax) + 1, 0.0);
    norm_p_wav_.assign(static_cast<std::size_t>(smax) + 1, 0.0);
    norm_d_scal_.assign(static_cast<std::size_t>(smax) + 1, 0.0);
    norm_d_wav_.assign(static_cast<std::size_t>(smax) + 1, 0.0);
    for (int s = 1; s <= smax; ++s) {
        LineFn f = axis_line_fn(*uni_, AxisKind::scaling, s, 0, s, false);
        norm_p_scal_[static_cast<std::size_t>(s)] = std::sqrt(line_inner(f, f, uni_->corr_pp()));
        LineFn fd = axis_line_fn(*uni_, AxisKind::scaling, s, 0, s, true);
        norm_d_scal_[static_cast<std::size_t>(s)] = std::sqrt(line_inner(fd, fd, uni_->corr_dd()));
        LineFn w = axis_line_fn(*uni_, AxisKind::wavelet, s, 0, s + 1, false);
        norm_p_wav_[static_cast<std::size_t>(s)] = std::sqrt(line_inner(w, w, uni_->corr_pp()));
        LineFn wd = axis_line_fn(*uni_, AxisKind::wavelet, s, 0, s + 1, true);
        norm_d_wav_[static_cast<std::size_t>(s)] = std::sqrt(line_inner(wd, wd, uni_->corr_dd()));
    }
}

inline void WaveletSystem::build_grid()
{
    auto grid = std::make_shared<MultiscaleGrid>();
    grid->d = dec_->d;
    grid->bounded = true;
    grid->c1 = std::sqrt(static_cast<double>(dec_->d));
    grid->c2 = 0.5;
    grid->c3 = 1.0;
    grid->domain = domain_token("manifold-" + dec_->name);
    grid->levels.resize(static_cast<std::size_t>(J_) + 1);
    index_.resize(static_cast<std::size_t>(J_) + 1);

    const double scal_center = 0.5 * (uni_->scaling_support_lo() + uni_->scaling_support_hi());
    const double wav_center = 0.5 * (uni_->wavelet_support_lo() + uni_->wavelet_support_hi());
    const int d = dec_->d;

    auto wrap01 = [](double x) {
        double f = x - std::floor(x);
        return (f >= 1.0) ? 0.0 : f;
    };

    for (int level = 0; level <= J_; ++level) {
        auto& pts = grid->levels[static_cast<std::size_t>(level)];
        auto& idx = index_[static_cast<std::size_t>(level)];
        const int s = axis_scale(level);
        const int n_shift = 1 << s;
        const int t_lo = level == 0 ? 0 : 1;
        const int t_hi = level == 0 ? 0 : (1 << d) - 1;
        for (const auto& patch : dec_->patches) {
            for (int type = t_lo; type <= t_hi; ++type) {
                std::array<int, 3> k{0, 0, 0};
                const int n0 = level == 0 ? 2 : n_shift;
                const int n1 = d > 1 ? (level == 0 ? 2 : n_shift) : 1;
                for (k[0] = 0; k[0] < n0; ++k[0])
                    for (k[1] = 0; k[1] < n1; ++k[1]) {
                        std::array<double, 3> local{0.0, 0.0, 0.0};
                        for (int ax = 0; ax < d; ++ax) {
                            const AxisKind kind = axis_kind(level, type, ax);
                            const double center =
                                kind == AxisKind::scaling ? scal_center : wav_center;
                            local[ax] = wrap01((k[ax] + center) / n_shift);
                        }
                        IndexPoint pt;
                        pt.level = level;
                        pt.tag = type;
                        pt.patch = patch.id;
                        pt.local = local;
                        pt.pos = patch.eval(local);
                        pt.domain = grid->domain;
                        pts.push_back(pt);
                        idx.push_back({patch.id, type, k});
                    }
            }
        }
    }
    grid_ = grid;
}

inline std::uint32_t WaveletSystem::flat_index(int level, const WaveletIndex& wi) const
{
    const int d = dec_->d;
    const int n_shift = 1 << axis_scale(level);
    const int types = level == 0 ? 1 : (1 << d) - 1;
    const int per_type = d == 1 ? n_shift : n_shift * n_shift;
    const int type_slot = level == 0 ? 0 : wi.type - 1;
    const int k_slot = d == 1 ? wi.k[0] : wi.k[0] * n_shift + wi.k[1];
    return static_cast<std::uint32_t>((wi.patch * types + type_slot) * per_type + k_slot);
}

inline Complex WaveletSystem::SplineField::eval(int patch, const std::array<double, 3>& x) const
{
    const int d = dec->d;
    const int D = uni->order();
    const int period = 1 << scale;
    const auto& c = patch_coeffs[static_cast<std::size_t>(patch)];
    const double amp = std::pow(2.0, 0.5 * scale * d);

    auto axis_hits = [&](double xi, std::vector<std::pair<int, double>>& out) {
        out.clear();
        const double t = (xi - std::floor(xi)) * period;
        const int k_hi = static_cast<int>(std::floor(t));
        for (int k = k_hi - D + 1; k <= k_hi; ++k) {
            const double v = UnivariateSystem::bspline_value(D, t - k);
            if (v != 0.0) out.emplace_back(((k % period) + period) % period, v);
        }
    };

    std::vector<std::pair<int, double>> h0, h1;
    axis_hits(x[0], h0);
    if (d == 1) {
        Complex s = 0.0;
        for (const auto& [k, v] : h0) s += c[static_cast<std::size_t>(k)] * v;
        return amp * s;
    }
    axis_hits(x[1], h1);
    Complex s = 0.0;
    for (const auto& [k0, v0] : h0)
        for (const auto& [k1, v1] : h1)
            s += c[static_cast<std::size_t>(k0 * period + k1)] * (v0 * v1);
    return amp * s;
}

inline CoeffSequence WaveletSystem::analyze_field(const SplineField& u, int J) const
{
    if (J > J_) throw std::invalid_argument("analyze_field: J exceeds system max level");
    CoeffSequence out(grid_);
    const int d = dim();
    const Mask& hd = uni_->h_dual();
    const Mask& gd = uni_->g_dual();

    for (std::size_t p = 0; p < dec_->patches.size(); ++p) {
        std::vector<Complex> c = u.patch_coeffs[p];
        int s = u.scale;
        if (d == 1) {
            while (s > J + 1) {
                c = analysis_step(c, hd);
                --s;
            }
            while (s >= 2) {
                auto coarse = analysis_step(c, hd);
                auto det = analysis_step(c, gd);
                const int level = s - 1;
                const double bal = balance_constant(level, 1);
                for (std::size_t k = 0; k < det.size(); ++k)
                    if (det[k] != Complex(0.0, 0.0))
                        out.set(level,
                                flat_index(level,
                                           {static_cast<int>(p), 1, {static_cast<int>(k), 0, 0}}),
                                det[k] / bal);
                c = std::move(coarse);
                --s;
            }
            const double bal0 = balance_constant(0, 0);
            for (std::size_t k = 0; k < c.size(); ++k)
                if (c[k] != Complex(0.0, 0.0))
                    out.set(0, flat_index(0, {static_cast<int>(p), 0, {static_cast<int>(k), 0, 0}}),
                            c[k] / bal0);
        } else {
            while (s > J + 1) {
                const int n = 1 << s;
                auto lo0 = detail::filt_rows(c, n, n, hd);
                c = detail::filt_cols(lo0, n / 2, n, hd);
                --s;
            }
            while (s >= 2) {
                const int n = 1 << s;
                const int half = n / 2;
                auto lo0 = detail::filt_rows(c, n, n, hd);
                auto hi0 = detail::filt_rows(c, n, n, gd);
                auto ll = detail::filt_cols(lo0, half, n, hd);
                auto lh = detail::filt_cols(lo0, half, n, gd); // wavelet along axis 1
                auto hl = detail::filt_cols(hi0, half, n, hd); // wavelet along axis 0
                auto hh = detail::filt_cols(hi0, half, n, gd);
                const int level = s - 1;
                auto emit = [&](const std::vector<Complex>& blk, int type) {
                    const double bal = balance_constant(level, type);
                    for (int k0 = 0; k0 < half; ++k0)
                        for (int k1 = 0; k1 < half; ++k1) {
                            const Complex v = blk[static_cast<std::size_t>(k0 * half + k1)];
                            if (v != Complex(0.0, 0.0))
                                out.set(level,
                                        flat_index(level,
                                                   {static_cast<int>(p), type, {k0, k1, 0}}),
                                        v / bal);
                        }
                };
                emit(hl, 1);
                emit(lh, 2);
                emit(hh, 3);
                c = std::move(ll);
                --s;
            }
            const double bal0 = balance_constant(0, 0);
            for (int k0 = 0; k0 < 2; ++k0)
                for (int k1 = 0; k1 < 2; ++k1) {
                    const Complex v = c[static_cast<std::size_t>(k0 * 2 + k1)];
                    if (v != Complex(0.0, 0.0))
                        out.set(0, flat_index(0, {static_cast<int>(p), 0, {k0, k1, 0}}), v / bal0);
                }
        }
    }
    return out;
}

inline CoeffSequence WaveletSystem::analyze(const PatchFunction& u, int J, int oversample) const
{
    if (J > J_) throw std::invalid_argument("analyze: J exceeds system max level");
    if (!u.valid()) throw std::invalid_argument("analyze: empty function");
    const int d = dim();
    const int L = J + 1 + std::max(0, oversample);
    const auto rule = moment_quadrature(uni_->h_dual(), 10);
    const int period = 1 << L;
    const double amp = std::pow(2.0, -0.5 * L * d);

    auto wrap01 = [](double x) { return x - std::floor(x); };

    SplineField field;
    field.uni = uni_;
    field.dec = dec_;
    field.scale = L;
    field.patch_coeffs.resize(dec_->patches.size());
    for (std::size_t p = 0; p < dec_->patches.size(); ++p) {
        auto& c = field.patch_coeffs[p];
        if (d == 1) {
            c.assign(static_cast<std::size_t>(period), Complex(0.0, 0.0));
            for (int k = 0; k < period; ++k) {
                Complex acc = 0.0;
                for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                    const double x = wrap01((k + rule.nodes[i]) / period);
                    acc += rule.weights[i] * u(static_cast<int>(p), {x, 0.0, 0.0});
                }
                c[static_cast<std::size_t>(k)] = amp * acc;
            }
        } else {
            c.assign(static_cast<std::size_t>(period) * period, Complex(0.0, 0.0));
            for (int k0 = 0; k0 < period; ++k0)
                for (int k1 = 0; k1 < period; ++k1) {
                    Complex acc = 0.0;
                    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                        const double x = wrap01((k0 + rule.nodes[i]) / period);
                        Complex inner = 0.0;
                        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
                            const double y = wrap01((k1 + rule.nodes[j]) / period);
                            inner += rule.weights[j] * u(static_cast<int>(p), {x, y, 0.0});
                        }
                        acc += rule.weights[i] * inner;
                    }
                    c[static_cast<std::size_t>(k0 * period + k1)] = amp * acc;
                }
        }
    }
    return analyze_field(field, J);
}

inline WaveletSystem::SplineField WaveletSystem::synthesize(const CoeffSequence& a, int J) const
{
    if (J > J_) throw std::invalid_argument("synthesize: J exceeds system max level");
    check_sequence(a);
    const int d = dim();
    const Mask& h = uni_->h();
    const Mask& g = uni_->g();

    SplineField field;
    field.uni = uni_;
    field.dec = dec_;
    field.scale = J + 1;
    field.patch_coeffs.resize(dec_->patches.size());

    for (std::size_t p = 0; p < dec_->patches.size(); ++p) {
        if (d == 1) {
            std::vector<Complex> c(2, Complex(0.0, 0.0));
            const double bal0 = balance_constant(0, 0);
            for (int k = 0; k < 2; ++k)
                c[static_cast<std::size_t>(k)] =
                    a.get(0, flat_index(0, {static_cast<int>(p), 0, {k, 0, 0}})) * bal0;
            for (int level = 1; level <= J; ++level) {
                const int n = 1 << (level + 1);
                std::vector<Complex> fine(static_cast<std::size_t>(n), Complex(0.0, 0.0));
                synthesis_accumulate(fine, c, h);
                std::vector<Complex> det(static_cast<std::size_t>(n / 2), Complex(0.0, 0.0));
                const double bal = balance_constant(level, 1);
                for (int k = 0; k < n / 2; ++k)
                    det[static_cast<std::size_t>(k)] =
                        a.get(level, flat_index(level, {static_cast<int>(p), 1, {k, 0, 0}})) * bal;
                synthesis_accumulate(fine, det, g);
                c = std::move(fine);
            }
            field.patch_coeffs[p] = std::move(c);
        } else {
            const double bal0 = balance_constant(0, 0);
            std::vector<Complex> c(4, Complex(0.0, 0.0));
            for (int k0 = 0; k0 < 2; ++k0)
                for (int k1 = 0; k1 < 2; ++k1)
                    c[static_cast<std::size_t>(k0 * 2 + k1)] =
                        a.get(0, flat_index(0, {static_cast<int>(p), 0, {k0, k1, 0}})) * bal0;
            for (int level = 1; level <= J; ++level) {
                const int half = 1 << level;
                const int n = half * 2;
                auto block = [&](int type) {
                    std::vector<Complex> blk(static_cast<std::size_t>(half) * half,
                                             Complex(0.0, 0.0));
                    const double bal = balance_constant(level, type);
                    for (int k0 = 0; k0 < half; ++k0)
                        for (int k1 = 0; k1 < half; ++k1)
                            blk[static_cast<std::size_t>(k0 * half + k1)] =
                                a.get(level, flat_index(level, {static_cast<int>(p), type,
                                                                {k0, k1, 0}})) *
                                bal;
                    return blk;
                };
                auto hl = block(1), lh = block(2), hh = block(3);
                // inverse along axis 1: (half x half) -> (half x n)
                std::vector<Complex> lo0(static_cast<std::size_t>(half) * n, Complex(0.0, 0.0));
                std::vector<Complex> hi0(static_cast<std::size_t>(half) * n, Complex(0.0, 0.0));
                detail::up_cols(lo0, c, half, half, h);
                detail::up_cols(lo0, lh, half, half, g);
                detail::up_cols(hi0, hl, half, half, h);
                detail::up_cols(hi0, hh, half, half, g);
                // inverse along axis 0: (half x n) -> (n x n)
                std::vector<Complex> fine(static_cast<std::size_t>(n) * n, Complex(0.0, 0.0));
                detail::up_rows(fine, lo0, half, n, h);
                detail::up_rows(fine, hi0, half, n, g);
                c = std::move(fine);
            }
            field.patch_coeffs[p] = std::move(c);
        }
    }
    return field;
}

inline double WaveletSystem::field_l2_norm(const SplineField& u) const
{
    double total = 0.0;
    const int d = dim();
    const Mask& corr = uni_->corr_pp();
    for (const auto& c : u.patch_coeffs) {
        const int n = 1 << u.scale;
        if (d == 1) {
            // coefficients are w.r.t. 2^{L/2}-normalized functions, so the
            // 2^{-L} base factor cancels
            double acc = 0.0;
            for (int m = 0; m < n; ++m) {
                if (c[static_cast<std::size_t>(m)] == Complex(0.0, 0.0)) continue;
                for (int r = corr.lo(); r <= corr.hi(); ++r) {
                    const int k = (((m + r) % n) + n) % n;
                    acc += corr.at(r) *
                           (c[static_cast<std::size_t>(m)] *
                            std::conj(c[static_cast<std::size_t>(k)]))
                               .real();
                }
            }
            total += acc;
        } else {
            // apply the univariate Gramian along axis 1, then contract axis 0
            std::vector<Complex> tmp(c.size(), Complex(0.0, 0.0));
            for (int i = 0; i < n; ++i)
                for (int r = corr.lo(); r <= corr.hi(); ++r) {
                    const double w = corr.at(r);
                    if (w == 0.0) continue;
                    for (int k = 0; k < n; ++k) {
                        const int kk = (((k + r) % n) + n) % n;
                        tmp[static_cast<std::size_t>(i * n + k)] +=
                            w * c[static_cast<std::size_t>(i * n + kk)];
                    }
                }
            double acc = 0.0;
            for (int i = 0; i < n; ++i)
                for (int r = corr.lo(); r <= corr.hi(); ++r) {
                    const double w = corr.at(r);
                    if (w == 0.0) continue;
                    const int ii = (((i + r) % n) + n) % n;
                    for (int k = 0; k < n; ++k)
                        acc += w * (c[static_cast<std::size_t>(i * n + k)] *
                                    std::conj(tmp[static_cast<std::size_t>(ii * n + k)]))
                                       .real();
                }
            total += acc;
        }
    }
    return std::sqrt(std::max(0.0, total));
}

inline MomentsReport WaveletSystem::moments_check(int degree_max) const
{
    MomentsReport report;
    const auto& Mp = uni_->primal_moments();
    const auto& Md = uni_->dual_moments();

    // wavelet moments W_n = int x^n psi(x) dx from the mask and scaling moments
    auto wavelet_moments = [&](const Mask& wav, const std::vector<double>& M, int n_max) {
        std::vector<double> W(static_cast<std::size_t>(n_max) + 1, 0.0);
        for (int n = 0; n <= n_max; ++n) {
            double acc = 0.0;
            for (int m = wav.lo(); m <= wav.hi(); ++m) {
                double inner = 0.0;
                for (int i = 0; i <= n; ++i)
                    inner += detail::binomial(n, i) * std::pow(static_cast<double>(m), n - i) *
                             M[static_cast<std::size_t>(i)];
                acc += wav.at(m) * inner;
            }
            W[static_cast<std::size_t>(n)] = acc * std::pow(2.0, -n - 1);
        }
        return W;
    };
    const int w_max = std::max(degree_max + 1, std::max(uni_->order(), uni_->dual_order()));
    const auto Wp = wavelet_moments(uni_->g(), Mp, w_max);
    const auto Wd = wavelet_moments(uni_->g_dual(), Md, w_max);

    auto scaled_moment = [&](const std::vector<double>& W, int s, int k, int n) {
        double acc = 0.0;
        for (int i = 0; i <= n; ++i)
            acc += detail::binomial(n, i) * std::pow(static_cast<double>(k), n - i) *
                   W[static_cast<std::size_t>(i)];
        return std::pow(2.0, 0.5 * s) * std::pow(2.0, -s * (n + 1)) * acc;
    };

    const double wav_lo = uni_->wavelet_support_lo();
    const double wav_hi = uni_->wavelet_support_hi();
    for (int level = 1; level <= J_; ++level) {
        const int s = axis_scale(level);
        const int n_shift = 1 << s;
        const double bal = axis_balance(AxisKind::wavelet, s);
        for (int k = 0; k < n_shift; ++k) {
            const double lo = (k + wav_lo) / n_shift;
            const double hi = (k + wav_hi) / n_shift;
            if (lo < 0.0 || hi > 1.0) {
                ++report.n_skipped_wrapping;
                continue;
            }
            ++report.n_checked;
            for (int n = 0; n < uni_->dual_order() && n <= degree_max; ++n)
                report.max_abs_primal = std::max(report.max_abs_primal,
                                                 std::abs(bal * scaled_moment(Wp, s, k, n)));
            for (int n = 0; n < uni_->order() && n <= degree_max; ++n)
                report.max_abs_dual =
                    std::max(report.max_abs_dual, std::abs(scaled_moment(Wd, s, k, n) / bal));
            report.first_nonzero_primal =
                std::max(report.first_nonzero_primal,
                         std::abs(bal * scaled_moment(Wp, s, k, uni_->dual_order())));
        }
    }
    report.ok =
        report.n_checked > 0 && report.max_abs_primal < 1e-8 && report.max_abs_dual < 1e-8;
    return report;
}

inline SupportReport WaveletSystem::support_check(double threshold) const
{
    SupportReport report;
    report.anchors_contained = true;
    const double wav_center = 0.5 * (uni_->wavelet_support_lo() + uni_->wavelet_support_hi());
    for (int level = 1; level <= J_; ++level) {
        const int s = axis_scale(level);
        const int n_samples = 1 << std::min(s + 7, 14);
        std::vector<double> vals(static_cast<std::size_t>(n_samples), 0.0);
        double sup = 0.0;
        const double amp = std::pow(2.0, 0.5 * s);
        for (int i = 0; i < n_samples; ++i) {
            const double x = (static_cast<double>(i) + 0.5) / n_samples;
            double v = 0.0;
            for (int l = -8; l <= 8; ++l) v += uni_->wavelet_eval((x + l) * (1 << s));
            vals[static_cast<std::size_t>(i)] = std::abs(amp * v);
            sup = std::max(sup, vals[static_cast<std::size_t>(i)]);
        }
        const double cut = threshold * sup;
        // the longest uncovered arc on the circle fixes the torus diameter
        int longest_gap = 0, cur_gap = 0;
        for (int pass = 0; pass < 2 * n_samples; ++pass) {
            if (vals[static_cast<std::size_t>(pass % n_samples)] <= cut) {
                ++cur_gap;
                if (cur_gap >= n_samples) {
                    longest_gap = n_samples;
                    break;
                }
                longest_gap = std::max(longest_gap, cur_gap);
            } else {
                cur_gap = 0;
            }
        }
        const double diam = 1.0 - static_cast<double>(longest_gap) / n_samples;
        report.scaled_diam.push_back(diam * (1 << s));

        const double anchor_raw = wav_center / (1 << s);
        const double anchor = anchor_raw - std::floor(anchor_raw);
        bool near = false;
        const int ia = static_cast<int>(anchor * n_samples);
        for (int off = -4; off <= 4; ++off) {
            const int i = ((ia + off) % n_samples + n_samples) % n_samples;
            if (vals[static_cast<std::size_t>(i)] > cut) near = true;
        }
        if (!near) report.anchors_contained = false;
    }
    double lo = 1e300, hi = 0.0;
    for (double v : report.scaled_diam) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    report.c_upper = hi;
    report.ok = report.anchors_contained && lo >= 0.75 && hi < 64.0;
    return report;
}

inline DecayFit WaveletSystem::coefficient_decay_check(const PatchFunction& f, double s,
                                                       int oversample) const
{
    if (!(s > dim() / 2.0) || s > uni_->order())
        throw std::invalid_argument("coefficient_decay_check: need d/2 < s <= D");
    auto a = analyze(f, J_, oversample);
    DecayFit fit;
    fit.s_required = s;
    for (int level = 1; level <= J_; ++level) {
        double mx = 0.0;
        for (const auto& e : a.level(level)) mx = std::max(mx, std::abs(e.second));
        fit.level_max.push_back(mx);
    }
    fit.all_zero = true;
    for (double v : fit.level_max)
        if (v > 1e-13) fit.all_zero = false;
    if (fit.all_zero) {
        fit.rho = std::numeric_limits<double>::infinity();
        fit.ok = true;
        return fit;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int level = 2; level <= J_; ++level) {
        const double v = fit.level_max[static_cast<std::size_t>(level - 1)];
        if (v <= 1e-14) continue;
        const double y = std::log2(v);
        sx += level;
        sy += y;
        sxx += static_cast<double>(level) * level;
        sxy += level * y;
        ++n;
    }
    if (n >= 2) fit.rho = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.ok = fit.rho >= s - 0.25;
    return fit;
}

/// Parse a basis spec string like "spline:D=2,Dt=4,mode=periodic".
inline std::pair<int, int> parse_basis_spec(const std::string& spec)
{
    if (spec.rfind("spline:", 0) != 0)
        throw std::invalid_argument("parse_basis_spec: expected 'spline:...'");
    int D = -1, Dt = -1;
    std::string rest = spec.substr(7);
    std::size_t pos = 0;
    while (pos < rest.size()) {
        std::size_t comma = rest.find(',', pos);
        if (comma == std::string::npos) comma = rest.size();
        const std::string field = rest.substr(pos, comma - pos);
        const std::size_t eq = field.find('=');
        if (eq != std::string::npos) {
            const std::string key = field.substr(0, eq);
            const std::string val = field.substr(eq + 1);
            if (key == "D")
                D = std::stoi(val);
            else if (key == "Dt")
                Dt = std::stoi(val);
            else if (key == "mode" && val != "periodic")
                throw std::invalid_argument("parse_basis_spec: only periodic mode is built");
        }
        pos = comma + 1;
    }
    if (D < 1 || Dt < D) throw std::invalid_argument("parse_basis_spec: need D>=1, Dt>=D");
    return {D, Dt};
}

} // namespace besovkit
