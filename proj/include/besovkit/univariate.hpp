#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace besovkit {

/// Laurent polynomial / filter mask: coefficients c[i] at index offset+i.
struct Mask {
    int offset = 0;
    std::vector<double> c;

    int lo() const { return offset; }
    int hi() const { return offset + static_cast<int>(c.size()) - 1; }
    double at(int k) const
    {
        const int i = k - offset;
        return (i >= 0 && i < static_cast<int>(c.size())) ? c[static_cast<std::size_t>(i)] : 0.0;
    }
    double sum() const
    {
        double s = 0.0;
        for (double v : c) s += v;
        return s;
    }
};

inline Mask mask_multiply(const Mask& a, const Mask& b)
{
    Mask out;
    out.offset = a.offset + b.offset;
    out.c.assign(a.c.size() + b.c.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.c.size(); ++i)
        for (std::size_t j = 0; j < b.c.size(); ++j) out.c[i + j] += a.c[i] * b.c[j];
    return out;
}

inline Mask mask_add(const Mask& a, const Mask& b)
{
    Mask out;
    out.offset = std::min(a.lo(), b.lo());
    out.c.assign(static_cast<std::size_t>(std::max(a.hi(), b.hi()) - out.offset + 1), 0.0);
    for (int k = a.lo(); k <= a.hi(); ++k) out.c[static_cast<std::size_t>(k - out.offset)] += a.at(k);
    for (int k = b.lo(); k <= b.hi(); ++k) out.c[static_cast<std::size_t>(k - out.offset)] += b.at(k);
    return out;
}

inline Mask mask_scale(Mask a, double s)
{
    for (double& v : a.c) v *= s;
    return a;
}

namespace detail {

inline double binomial(int n, int k)
{
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return r;
}

/// Dense linear solve (Gaussian elimination, partial pivoting); A is n x n
/// row-major, b of length n. Returns x.
inline std::vector<double> solve_dense(std::vector<double> A, std::vector<double> b)
{
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(A[r * n + col]) > std::abs(A[piv * n + col])) piv = r;
        if (std::abs(A[piv * n + col]) < 1e-300)
            throw std::runtime_error("solve_dense: singular matrix");
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(A[piv * n + c], A[col * n + c]);
            std::swap(b[piv], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = A[r * n + col] / A[col * n + col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) A[r * n + c] -= f * A[col * n + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t c = r + 1; c < n; ++c) s -= A[r * n + c] * x[c];
        x[r] = s / A[r * n + r];
    }
    return x;
}

} // namespace detail

/// B-spline refinement mask of order D: h_k = 2^{1-D} C(D,k), k = 0..D.
inline Mask bspline_mask(int order)
{
    if (order < 1) throw std::invalid_argument("bspline_mask: order >= 1");
    Mask h;
    h.offset = 0;
    h.c.resize(static_cast<std::size_t>(order) + 1);
    const double scale = std::pow(2.0, 1 - order);
    for (int k = 0; k <= order; ++k)
        h.c[static_cast<std::size_t>(k)] = scale * detail::binomial(order, k);
    return h;
}

/// Dual spline mask of exactness D_dual for primal order D (D + D_dual even):
/// coefficients of 2 z^{-(Dt-D)/2} ((1+z)/2)^{Dt} P_L((2-z-1/z)/4), L=(D+Dt)/2.
inline Mask dual_spline_mask(int D, int D_dual)
{
    if (D_dual < D || (D + D_dual) % 2 != 0)
        throw std::invalid_argument("dual_spline_mask: need D_dual >= D with D + D_dual even");
    const int L = (D + D_dual) / 2;

    Mask y; // (2 - z - 1/z)/4
    y.offset = -1;
    y.c = {-0.25, 0.5, -0.25};

    // P_L(y) = sum_{n=0}^{L-1} C(L-1+n, n) y^n, evaluated as a Laurent polynomial
    Mask p;
    p.offset = 0;
    p.c = {detail::binomial(L - 1 + (L - 1), L - 1)};
    for (int n = L - 2; n >= 0; --n) {
        p = mask_multiply(p, y);
        Mask constant;
        constant.offset = 0;
        constant.c = {detail::binomial(L - 1 + n, n)};
        p = mask_add(p, constant);
    }

    Mask lowpass; // ((1+z)/2)^{Dt}
    lowpass.offset = 0;
    lowpass.c.resize(static_cast<std::size_t>(D_dual) + 1);
    for (int k = 0; k <= D_dual; ++k)
        lowpass.c[static_cast<std::size_t>(k)] =
            detail::binomial(D_dual, k) * std::pow(2.0, -D_dual);

    Mask m = mask_multiply(lowpass, p);
    m.offset -= (D_dual - D) / 2;
    return mask_scale(m, 2.0);
}

/// Wavelet masks: g_k = (-1)^k hd_{1-k} (primal), gd_k = (-1)^k h_{1-k} (dual).
inline Mask wavelet_mask_from(const Mask& other_scaling)
{
    Mask g;
    g.offset = 1 - other_scaling.hi();
    g.c.resize(other_scaling.c.size());
    for (int k = g.lo(); k <= g.hi(); ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        g.c[static_cast<std::size_t>(k - g.offset)] = sign * other_scaling.at(1 - k);
    }
    return g;
}

/// Integer-shift correlations G(n) = int f_a(x) f_b(x - n) dx for refinable
/// f_a, f_b with masks a, b (both with sum 2 and unit integral), via the
/// eigenvector of G(n) = 1/2 sum_{k,l} a_k b_l G(2n + l - k).
inline Mask refinable_correlation(const Mask& a, const Mask& b)
{
    const int lo = a.lo() - b.hi();
    const int hi = a.hi() - b.lo();
    const int n = hi - lo + 1;
    // rows: equation for G(i+lo); solve (T - I) G = 0 with sum G = 1 by
    // least squares (T - I has a one-dimensional nullspace here).
    std::vector<double> rows(static_cast<std::size_t>((n + 1) * n), 0.0);
    for (int i = 0; i < n; ++i) {
        const int ni = lo + i;
        for (int k = a.lo(); k <= a.hi(); ++k)
            for (int l = b.lo(); l <= b.hi(); ++l) {
                const int m = 2 * ni + l - k;
                if (m < lo || m > hi) continue;
                rows[static_cast<std::size_t>(i * n + (m - lo))] += 0.5 * a.at(k) * b.at(l);
            }
        rows[static_cast<std::size_t>(i * n + i)] -= 1.0;
    }
    for (int j = 0; j < n; ++j) rows[static_cast<std::size_t>(n * n + j)] = 1.0;

    // normal equations
    std::vector<double> ata(static_cast<std::size_t>(n) * n, 0.0), atb(static_cast<std::size_t>(n), 0.0);
    for (int r = 0; r < n + 1; ++r) {
        const double br = (r == n) ? 1.0 : 0.0;
        for (int i = 0; i < n; ++i) {
            const double ri = rows[static_cast<std::size_t>(r * n + i)];
            if (ri == 0.0) continue;
            atb[static_cast<std::size_t>(i)] += ri * br;
            for (int j = 0; j < n; ++j)
                ata[static_cast<std::size_t>(i * n + j)] += ri * rows[static_cast<std::size_t>(r * n + j)];
        }
    }
    Mask G;
    G.offset = lo;
    G.c = detail::solve_dense(std::move(ata), std::move(atb));

    // residual sanity: the eigen-identity must hold to solver precision
    double res = 0.0;
    for (int i = 0; i < n; ++i) {
        double s = -G.c[static_cast<std::size_t>(i)];
        const int ni = lo + i;
        for (int k = a.lo(); k <= a.hi(); ++k)
            for (int l = b.lo(); l <= b.hi(); ++l) s += 0.5 * a.at(k) * b.at(l) * G.at(2 * ni + l - k);
        res = std::max(res, std::abs(s));
    }
    if (res > 1e-9) throw std::runtime_error("refinable_correlation: eigen residual too large");
    return G;
}

/// Moments M_n = int x^n f(x) dx of the refinable function of `mask`
/// (normalized so M_0 = 1): M_n = [sum_{i<n} C(n,i) S_{n-i} M_i] / (2^{n+1}-2).
inline std::vector<double> refinable_moments(const Mask& mask, int n_max)
{
    std::vector<double> M(static_cast<std::size_t>(n_max) + 1, 0.0);
    M[0] = 1.0;
    for (int n = 1; n <= n_max; ++n) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            double S = 0.0;
            for (int k = mask.lo(); k <= mask.hi(); ++k)
                S += mask.at(k) * std::pow(static_cast<double>(k), n - i);
            acc += detail::binomial(n, i) * S * M[static_cast<std::size_t>(i)];
        }
        M[static_cast<std::size_t>(n)] = acc / (std::pow(2.0, n + 1) - 2.0);
    }
    return M;
}

/// Quadrature rule integrating g against the refinable function of `mask`:
/// int g(t) f(t) dt ~ sum w_i g(tau_i), exact for polynomials of degree < n.
/// Nodes are Chebyshev points in the support; weights match the moments.
struct MomentRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline MomentRule moment_quadrature(const Mask& mask, int n)
{
    const auto M = refinable_moments(mask, n - 1);
    const double a = mask.lo();
    const double b = mask.hi();
    const double c = 0.5 * (a + b);
    const double r = 0.5 * (b - a);
    MomentRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        rule.nodes[static_cast<std::size_t>(i)] =
            c + r * std::cos(M_PI * (2.0 * i + 1.0) / (2.0 * n));

    // centered moments for conditioning
    std::vector<double> Mc(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i <= k; ++i)
            Mc[static_cast<std::size_t>(k)] += detail::binomial(k, i) *
                                               std::pow(-c, k - i) * M[static_cast<std::size_t>(i)];

    std::vector<double> V(static_cast<std::size_t>(n) * n, 0.0);
    for (int row = 0; row < n; ++row)
        for (int col = 0; col < n; ++col)
            V[static_cast<std::size_t>(row * n + col)] =
                std::pow(rule.nodes[static_cast<std::size_t>(col)] - c, row);
    rule.weights = detail::solve_dense(std::move(V), std::move(Mc));
    return rule;
}

/// Antiderivative A(x) = int_{-inf}^x f of the refinable function of `mask`,
/// tabulated on dyadic points of resolution 2^{-depth} over the support.
struct Antiderivative {
    int lo = 0;     // support start
    int depth = 0;  // dyadic resolution
    std::vector<double> values; // A(lo + i 2^{-depth})

    double eval(double x) const
    {
        const double step = std::pow(2.0, -depth);
        const double pos = (x - lo) / step;
        if (pos <= 0.0) return 0.0;
        if (pos >= static_cast<double>(values.size() - 1)) return 1.0;
        const auto i = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i);
        return values[i] * (1.0 - frac) + values[i + 1] * frac;
    }
};

inline Antiderivative refinable_antiderivative(const Mask& mask, int depth = 12)
{
    const int lo = mask.lo();
    const int hi = mask.hi();
    Antiderivative A;
    A.lo = lo;
    A.depth = depth;

    // integer values: A(n) = sum_k (h_k/2) A(2n-k), A(lo)=0, A(hi)=1
    const int n_unknown = hi - lo - 1;
    std::vector<double> integers(static_cast<std::size_t>(hi - lo + 1), 0.0);
    integers.back() = 1.0;
    if (n_unknown > 0) {
        std::vector<double> Amat(static_cast<std::size_t>(n_unknown) * n_unknown, 0.0);
        std::vector<double> rhs(static_cast<std::size_t>(n_unknown), 0.0);
        auto col_of = [&](int m) { return m - (lo + 1); };
        for (int i = 0; i < n_unknown; ++i) {
            const int n = lo + 1 + i;
            Amat[static_cast<std::size_t>(i * n_unknown + i)] -= 1.0;
            for (int k = mask.lo(); k <= mask.hi(); ++k) {
                const int m = 2 * n - k;
                const double w = 0.5 * mask.at(k);
                if (w == 0.0) continue;
                if (m <= lo) continue;       // A = 0
                if (m >= hi) rhs[static_cast<std::size_t>(i)] -= w; // A = 1
                else Amat[static_cast<std::size_t>(i * n_unknown + col_of(m))] += w;
            }
        }
        auto x = detail::solve_dense(std::move(Amat), std::move(rhs));
        for (int i = 0; i < n_unknown; ++i) integers[static_cast<std::size_t>(i + 1)] = x[static_cast<std::size_t>(i)];
    }

    // refine to dyadic resolution level by level
    std::vector<double> cur = integers; // resolution 2^0
    for (int level = 1; level <= depth; ++level) {
        const std::size_t n_new = (cur.size() - 1) * 2 + 1;
        std::vector<double> next(n_new, 0.0);
        const double step = std::pow(2.0, -level);
        auto eval_prev = [&](double x) {
            const double prev_step = std::pow(2.0, -(level - 1));
            const double pos = (x - lo) / prev_step;
            if (pos <= 0.0) return 0.0;
            if (pos >= static_cast<double>(cur.size() - 1)) return 1.0;
            const auto i = static_cast<std::size_t>(pos);
            // positions here are exact multiples of the previous step
            return cur[i];
        };
        for (std::size_t i = 0; i < n_new; ++i) {
            const double x = lo + static_cast<double>(i) * step;
            if (i % 2 == 0) {
                next[i] = cur[i / 2];
                continue;
            }
            double s = 0.0;
            for (int k = mask.lo(); k <= mask.hi(); ++k) s += 0.5 * mask.at(k) * eval_prev(2.0 * x - k);
            next[i] = s;
        }
        cur = std::move(next);
    }
    A.values = std::move(cur);
    return A;
}

/// Sobolev regularity estimate of the refinable function of a mask that
/// factors as ((1+z)/2)^order Q(z): s = order - log_4 rho(T), with T the
/// transition matrix 2 autocorr(Q)_{2n-k}.
inline double sobolev_exponent_estimate(const Mask& mask, int spline_factor_order)
{
    // divide out ((1+z)/2)^order: synthetic division by (1+z), order times
    Mask q = mask_scale(mask, 0.5); // masks sum to 2, symbols to 1
    for (int it = 0; it < spline_factor_order; ++it) {
        Mask next;
        next.offset = q.offset;
        next.c.assign(q.c.size() - 1, 0.0);
        double carry = 0.0;
        for (std::size_t i = 0; i < next.c.size(); ++i) {
            next.c[i] = (q.c[i] - carry);
            carry = next.c[i];
        }
        // verify the division was exact (remainder ~ 0)
        if (std::abs(q.c.back() - carry) > 1e-10)
            throw std::runtime_error("sobolev_exponent_estimate: mask does not factor");
        q = mask_scale(next, 2.0); // divided by (1+z)/2
    }
    // autocorrelation a_n = sum_k q_k q_{k-n}
    const int deg = static_cast<int>(q.c.size()) - 1;
    std::vector<double> a(static_cast<std::size_t>(2 * deg + 1), 0.0);
    for (std::size_t i = 0; i < q.c.size(); ++i)
        for (std::size_t j = 0; j < q.c.size(); ++j)
            a[static_cast<std::size_t>(static_cast<int>(i) - static_cast<int>(j) + deg)] +=
                q.c[i] * q.c[j];
    // T_{n,k} = 2 a_{2n-k}, |n|,|k| <= deg; spectral radius by power iteration
    const int n = 2 * deg + 1;
    std::vector<double> v(static_cast<std::size_t>(n), 1.0), w(static_cast<std::size_t>(n));
    double rho = 1.0;
    for (int it = 0; it < 2000; ++it) {
        for (int r = 0; r < n; ++r) {
            double s = 0.0;
            const int nr = r - deg;
            for (int c = 0; c < n; ++c) {
                const int kc = c - deg;
                const int idx = 2 * nr - kc + deg;
                if (idx >= 0 && idx < 2 * deg + 1) s += 2.0 * a[static_cast<std::size_t>(idx)] * v[static_cast<std::size_t>(c)];
            }
            w[static_cast<std::size_t>(r)] = s;
        }
        double norm = 0.0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) break;
        rho = norm;
        for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] / norm;
    }
    return spline_factor_order - std::log(rho) / std::log(4.0);
}

/// Periodized filter bank at scale `scale` (period 2^scale), mask indices mod
/// the period. Analysis: c_out[k] = 2^{-1/2} sum_m mask[m] c_in[2k+m].
template <typename T>
std::vector<T> analysis_step(const std::vector<T>& fine, const Mask& mask)
{
    const std::size_t n_fine = fine.size();
    const std::size_t n_coarse = n_fine / 2;
    std::vector<T> out(n_coarse, T{});
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (std::size_t k = 0; k < n_coarse; ++k) {
        T s{};
        for (int m = mask.lo(); m <= mask.hi(); ++m) {
            const std::size_t idx =
                static_cast<std::size_t>(((2 * static_cast<long long>(k) + m) % static_cast<long long>(n_fine) +
                                          static_cast<long long>(n_fine)) %
                                         static_cast<long long>(n_fine));
            s += mask.at(m) * fine[idx];
        }
        out[k] = inv_sqrt2 * s;
    }
    return out;
}

/// Synthesis: fine[n] += 2^{-1/2} sum_k mask[n-2k] coarse[k].
template <typename T>
void synthesis_accumulate(std::vector<T>& fine, const std::vector<T>& coarse, const Mask& mask)
{
    const std::size_t n_fine = fine.size();
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (std::size_t k = 0; k < coarse.size(); ++k) {
        for (int m = mask.lo(); m <= mask.hi(); ++m) {
            const std::size_t idx =
                static_cast<std::size_t>(((2 * static_cast<long long>(k) + m) % static_cast<long long>(n_fine) +
                                          static_cast<long long>(n_fine)) %
                                         static_cast<long long>(n_fine));
            fine[idx] += inv_sqrt2 * mask.at(m) * coarse[k];
        }
    }
}

/// One biorthogonal spline family: masks, exact tables, rules.
class UnivariateSystem {
public:
    UnivariateSystem(int D, int D_dual)
        : D_(D), D_dual_(D_dual)
    {
        if (D < 1) throw std::invalid_argument("UnivariateSystem: D >= 1");
        if (D_dual < D || (D + D_dual) % 2 != 0)
            throw std::invalid_argument("UnivariateSystem: need D_dual >= D, D + D_dual even");
        h_ = bspline_mask(D);
        h_dual_ = dual_spline_mask(D, D_dual);
        g_ = wavelet_mask_from(h_dual_);
        g_dual_ = wavelet_mask_from(h_);

        corr_pp_ = refinable_correlation(h_, h_);
        corr_dd_ = refinable_correlation(h_dual_, h_dual_);
        corr_pd_ = refinable_correlation(h_, h_dual_);

        dual_moments_ = refinable_moments(h_dual_, 24);
        primal_moments_ = refinable_moments(h_, 24);

        gamma_dual_ = sobolev_exponent_estimate(h_dual_, D_dual);
    }

    int order() const { return D_; }
    int dual_order() const { return D_dual_; }
    double gamma() const { return D_ - 0.5; }
    double gamma_dual() const { return gamma_dual_; }

    const Mask& h() const { return h_; }
    const Mask& h_dual() const { return h_dual_; }
    const Mask& g() const { return g_; }
    const Mask& g_dual() const { return g_dual_; }

    const Mask& corr_pp() const { return corr_pp_; }
    const Mask& corr_dd() const { return corr_dd_; }
    const Mask& corr_pd() const { return corr_pd_; }

    const std::vector<double>& dual_moments() const { return dual_moments_; }
    const std::vector<double>& primal_moments() const { return primal_moments_; }

    /// Support of the primal wavelet psi(x) = sum_k g_k theta(2x-k).
    double wavelet_support_lo() const { return 0.5 * g_.lo(); }
    double wavelet_support_hi() const { return 0.5 * (g_.hi() + h_.hi()); }
    double scaling_support_lo() const { return static_cast<double>(h_.lo()); }
    double scaling_support_hi() const { return static_cast<double>(h_.hi()); }
    double dual_scaling_support_lo() const { return static_cast<double>(h_dual_.lo()); }
    double dual_scaling_support_hi() const { return static_cast<double>(h_dual_.hi()); }
    double dual_wavelet_support_lo() const { return 0.5 * g_dual_.lo(); }
    double dual_wavelet_support_hi() const { return 0.5 * (g_dual_.hi() + h_dual_.hi()); }

    /// Pointwise primal B-spline theta (support [0, D]) via Cox-de Boor.
    static double bspline_value(int order, double x)
    {
        if (x < 0.0 || x > order) return 0.0;
        if (order == 1) return (x >= 0.0 && x < 1.0) ? 1.0 : 0.0;
        return (x * bspline_value(order - 1, x) +
                (order - x) * bspline_value(order - 1, x - 1.0)) /
               (order - 1);
    }

    double scaling_eval(double x) const { return bspline_value(D_, x); }

    /// Pointwise primal wavelet psi(x) = sum g_k theta(2x - k).
    double wavelet_eval(double x) const
    {
        double s = 0.0;
        for (int k = g_.lo(); k <= g_.hi(); ++k) s += g_.at(k) * scaling_eval(2.0 * x - k);
        return s;
    }

private:
    int D_;
    int D_dual_;
    double gamma_dual_ = 0.0;
    Mask h_, h_dual_, g_, g_dual_;
    Mask corr_pp_, corr_dd_, corr_pd_;
    std::vector<double> dual_moments_, primal_moments_;
};

} // namespace besovkit
