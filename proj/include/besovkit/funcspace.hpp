#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <thread>
#include <vector>

#include "besovkit/admat.hpp"
#include "besovkit/wavelet.hpp"

namespace besovkit {

/// A Besov-type function space B^alpha_{Psi,q}(L_p(Gamma)).
struct SpaceParams {
    std::shared_ptr<const WaveletSystem> basis;
    BesovParams prm;
    bool admissible = false;

    SpaceParams(std::shared_ptr<const WaveletSystem> basis_, BesovParams prm_)
        : basis(std::move(basis_)), prm(prm_)
    {
        if (!basis) throw std::invalid_argument("SpaceParams: null basis");
        prm.d = basis->dim();
        admissible = admissible_tuple(prm.alpha, prm.p, prm.q, prm.d, /*bounded=*/true);
    }
};

/// Truncated B^alpha_{Psi,q}(L_p) quasi-norm of u. Admissibility is enforced.
inline double besov_norm(const PatchFunction& u, const SpaceParams& sp, int J, int oversample = 2)
{
    if (!sp.admissible)
        throw std::invalid_argument("besov_norm: parameter tuple is not admissible");
    if (J > sp.basis->max_level()) throw std::invalid_argument("besov_norm: J beyond basis");
    return quasi_norm(sp.basis->analyze(u, J, oversample), sp.prm);
}

/// Exact variant for fields already expressed in the scaling basis.
inline double besov_norm_field(const WaveletSystem::SplineField& u, const SpaceParams& sp, int J)
{
    if (!sp.admissible)
        throw std::invalid_argument("besov_norm: parameter tuple is not admissible");
    return quasi_norm(sp.basis->analyze_field(u, J), sp.prm);
}

namespace detail {

/// Exact inner products between all univariate factors of system A (primal
/// side) and system B (dual side) up to level J: id(scaling, k) = k,
/// id(wavelet s, k) = 2^s + k.
class UnivariateCrossTable {
public:
    UnivariateCrossTable(const UnivariateSystem& A, const UnivariateSystem& B, int J)
        : J_(J), n_(std::size_t{1} << (J + 1))
    {
        const Mask corr = refinable_correlation(A.h(), B.h_dual());
        const int L = J + 1;
        std::vector<LineFn> a_fns(n_), b_fns(n_);
        for (int k = 0; k < 2; ++k) {
            a_fns[static_cast<std::size_t>(k)] = axis_line_fn(A, AxisKind::scaling, 1, k, L, false);
            b_fns[static_cast<std::size_t>(k)] = axis_line_fn(B, AxisKind::scaling, 1, k, L, true);
        }
        for (int s = 1; s <= J; ++s)
            for (int k = 0; k < (1 << s); ++k) {
                a_fns[static_cast<std::size_t>((1 << s) + k)] =
                    axis_line_fn(A, AxisKind::wavelet, s, k, L, false);
                b_fns[static_cast<std::size_t>((1 << s) + k)] =
                    axis_line_fn(B, AxisKind::wavelet, s, k, L, true);
            }
        table_.assign(n_ * n_, 0.0);
        for (std::size_t ib = 0; ib < n_; ++ib) {
            // pre-apply the correlation kernel to the B-side vector
            const LineFn& fb = b_fns[ib];
            const int period = 1 << L;
            std::vector<double> vb(static_cast<std::size_t>(period), 0.0);
            for (int m = 0; m < period; ++m) {
                double acc = 0.0;
                for (int r = corr.lo(); r <= corr.hi(); ++r) {
                    const int k = (((m + r) % period) + period) % period;
                    acc += corr.at(r) * fb.c[static_cast<std::size_t>(k)];
                }
                vb[static_cast<std::size_t>(m)] = acc;
            }
            const double scale_factor = std::pow(2.0, -L);
            for (std::size_t ia = 0; ia < n_; ++ia) {
                double acc = 0.0;
                const LineFn& fa = a_fns[ia];
                for (int m = 0; m < period; ++m)
                    acc += fa.c[static_cast<std::size_t>(m)] * vb[static_cast<std::size_t>(m)];
                table_[ia * n_ + ib] = acc * scale_factor;
            }
        }
    }

    static std::size_t factor_id(AxisKind kind, int s, int k)
    {
        return kind == AxisKind::scaling ? static_cast<std::size_t>(k)
                                         : static_cast<std::size_t>((1 << s) + k);
    }

    double value(AxisKind ka, int sa, int ka_shift, AxisKind kb, int sb, int kb_shift) const
    {
        return table_[factor_id(ka, sa, ka_shift) * n_ + factor_id(kb, sb, kb_shift)];
    }

private:
    int J_;
    std::size_t n_;
    std::vector<double> table_;
};

} // namespace detail

/// Gramian M_{Psi->Phi}: entries <psi_{k,eta}, phi~_{j,xi}> under the
/// patchwise inner product, rows indexed by the Phi grid, columns by Psi.
/// Entries are exact (two-scale algebra); |entry| <= drop_tol is not stored.
inline ScaleMatrix gramian(const WaveletSystem& psi, const WaveletSystem& phi, int J,
                           double drop_tol = 1e-13)
{
    if (psi.decomposition_ptr().get() != phi.decomposition_ptr().get() &&
        psi.decomposition().name != phi.decomposition().name)
        throw std::invalid_argument("gramian: systems live on different manifolds");
    if (J > psi.max_level() || J > phi.max_level())
        throw std::invalid_argument("gramian: J beyond a basis level");

    const int d = psi.dim();
    detail::UnivariateCrossTable table(psi.univariate(), phi.univariate(), J);
    ScaleMatrix G(phi.grid_ptr(), psi.grid_ptr());

    for (int j = 0; j <= J; ++j) {
        const auto& rows = phi.grid().levels[static_cast<std::size_t>(j)];
        for (int k = 0; k <= J; ++k) {
            const auto& cols = psi.grid().levels[static_cast<std::size_t>(k)];
            for (std::uint32_t r = 0; r < rows.size(); ++r) {
                const WaveletIndex& wr = phi.index(j, r);
                const double bal_b = phi.balance_constant(j, wr.type);
                for (std::uint32_t c = 0; c < cols.size(); ++c) {
                    const WaveletIndex& wc = psi.index(k, c);
                    if (wc.patch != wr.patch) continue;
                    double v = 1.0;
                    for (int ax = 0; ax < d && v != 0.0; ++ax)
                        v *= table.value(psi.axis_kind(k, wc.type, ax), psi.axis_scale(k),
                                         wc.k[static_cast<std::size_t>(ax)],
                                         phi.axis_kind(j, wr.type, ax), phi.axis_scale(j),
                                         wr.k[static_cast<std::size_t>(ax)]);
                    v *= psi.balance_constant(k, wc.type) / bal_b;
                    if (std::abs(v) > drop_tol) G.add(j, k, r, c, v);
                }
            }
        }
    }
    G.finalize();
    return G;
}

/// a expressed in the Phi system: apply the Gramian.
inline CoeffSequence change_of_basis(const CoeffSequence& a, const ScaleMatrix& G)
{
    return apply(G, a);
}

struct GramianDecayReport {
    double slope_up = 0.0;   // fit of log2 max|entry| vs level offset l > 0
    double slope_down = 0.0; // and l < 0 (against |l|)
    std::vector<std::pair<int, double>> level_max; // (offset, max |entry|)
    bool ok = false;
    bool vacuous = false;
};

/// Fits the per-offset decay of the Gramian and compares against the
/// almost-diagonality requirement at smoothness alpha:
///   l > 0 slope <= -(d/2 + alpha + eps0),
///   l < 0 slope <= -(d/2 - alpha + eps0 + sigma_tau), tau^{-1} = alpha/d + 1/2.
inline GramianDecayReport gramian_decay_check(const ScaleMatrix& G, const WaveletSystem& psi,
                                              const WaveletSystem& phi, double alpha,
                                              double eps0 = 0.1)
{
    (void)psi;
    const int d = phi.dim();
    GramianDecayReport report;
    std::map<int, double> max_by_offset;
    for (const auto& [key, trips] : G.blocks()) {
        const int offset = key.first - key.second;
        double& mx = max_by_offset[offset];
        for (const auto& t : trips) mx = std::max(mx, std::abs(t.value));
    }
    for (const auto& [off, mx] : max_by_offset) report.level_max.emplace_back(off, mx);

    auto fit_slope = [&](bool up) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (const auto& [off, mx] : max_by_offset) {
            if (up && off <= 0) continue;
            if (!up && off >= 0) continue;
            if (mx <= 0.0) continue;
            const double x = std::abs(off);
            const double y = std::log2(mx);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++n;
        }
        if (n < 2) return std::pair{0.0, false};
        return std::pair{(n * sxy - sx * sy) / (n * sxx - sx * sx), true};
    };

    auto [su, has_up] = fit_slope(true);
    auto [sd, has_down] = fit_slope(false);
    report.slope_up = su;
    report.slope_down = sd;
    if (!has_up && !has_down) {
        report.vacuous = true;
        report.ok = true;
        return report;
    }
    const double tau = 1.0 / (alpha / d + 0.5);
    const double st = sigma_p(tau, d);
    const double need_up = -(d / 2.0 + alpha + eps0);
    const double need_down = -(d / 2.0 - alpha + eps0 + st);
    report.ok = (!has_up || report.slope_up <= need_up) &&
                (!has_down || report.slope_down <= need_down);
    return report;
}

struct EquivalenceReport {
    struct PerLevel {
        int J = 0;
        double min_ratio = 0.0;
        double max_ratio = 0.0;
    };
    std::vector<PerLevel> per_j;
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    std::vector<double> ratios; // corpus x J, row-major in corpus order
};

/// Ratio besov_norm(u, Psi) / besov_norm(u, Phi) over a corpus, per truncation
/// level; extremes are reported, never asserted here. Corpus members are
/// analyzed independently (and in parallel when threads > 1).
inline EquivalenceReport equivalence_ratio(const std::vector<PatchFunction>& corpus,
                                           std::shared_ptr<const WaveletSystem> psi,
                                           std::shared_ptr<const WaveletSystem> phi,
                                           const BesovParams& prm, const std::vector<int>& Js,
                                           int oversample = 1, unsigned threads = 1)
{
    SpaceParams sp_psi(psi, prm);
    SpaceParams sp_phi(phi, prm);
    if (!sp_psi.admissible || !sp_phi.admissible)
        throw std::invalid_argument("equivalence_ratio: tuple is not admissible");

    EquivalenceReport report;
    report.min_ratio = std::numeric_limits<double>::infinity();
    report.max_ratio = 0.0;
    const int Jmax = *std::max_element(Js.begin(), Js.end());

    report.ratios.assign(corpus.size() * Js.size(), 0.0);
    auto run_one = [&](std::size_t ui) {
        // analyze once at the deepest level; truncations give the other Js
        auto a_psi = psi->analyze(corpus[ui], Jmax, oversample);
        auto a_phi = phi->analyze(corpus[ui], Jmax, oversample);
        for (std::size_t ji = 0; ji < Js.size(); ++ji) {
            const int J = Js[ji];
            const double np = quasi_norm(a_psi.truncated(J), prm);
            const double nf = quasi_norm(a_phi.truncated(J), prm);
            report.ratios[ui * Js.size() + ji] = np / nf;
        }
    };
    if (threads <= 1) {
        for (std::size_t ui = 0; ui < corpus.size(); ++ui) run_one(ui);
    } else {
        const unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(corpus.size()));
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t ui = w; ui < corpus.size(); ui += workers) run_one(ui);
            });
        for (auto& t : pool) t.join();
    }
    for (std::size_t ji = 0; ji < Js.size(); ++ji) {
        EquivalenceReport::PerLevel pl;
        pl.J = Js[ji];
        pl.min_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t ui = 0; ui < corpus.size(); ++ui) {
            const double r = report.ratios[ui * Js.size() + ji];
            pl.min_ratio = std::min(pl.min_ratio, r);
            pl.max_ratio = std::max(pl.max_ratio, r);
        }
        report.min_ratio = std::min(report.min_ratio, pl.min_ratio);
        report.max_ratio = std::max(report.max_ratio, pl.max_ratio);
        report.per_j.push_back(pl);
    }
    return report;
}

/// Ten-function default corpus: constants, trigonometric functions,
/// polynomial ramps, a point singularity, and a kink.
inline std::vector<PatchFunction> default_corpus(const Decomposition& dec)
{
    std::vector<PatchFunction> corpus;
    if (dec.d == 1) {
        auto local = [&](std::function<double(double)> f) {
            corpus.push_back(PatchFunction::from_local(
                [f = std::move(f)](int, const std::array<double, 3>& x) {
                    return Complex(f(x[0]), 0.0);
                }));
        };
        local([](double) { return 1.0; });
        local([](double x) { return std::sin(2.0 * M_PI * x); });
        local([](double x) { return std::cos(4.0 * M_PI * x); });
        local([](double x) { return std::sin(2.0 * M_PI * x) + 0.3 * std::cos(6.0 * M_PI * x); });
        local([](double x) { return x * (1.0 - x); });
        local([](double x) { return x * x * (1.0 - x) * (1.0 - x); });
        local([](double x) { return std::exp(std::sin(2.0 * M_PI * x)); });
        local([](double x) { return std::pow(std::abs(x - 1.0 / 3.0), 0.6); });
        local([](double x) { return std::abs(std::sin(M_PI * (x - 1.0 / 3.0))); });
        local([](double x) { return 0.5 + std::sin(2.0 * M_PI * x) * std::cos(2.0 * M_PI * x); });
    } else {
        auto ambient = [&](std::function<double(const Vec3&)> f) {
            corpus.push_back(PatchFunction::from_ambient(
                dec, [f = std::move(f)](const Vec3& y) { return Complex(f(y), 0.0); }));
        };
        ambient([](const Vec3&) { return 1.0; });
        ambient([](const Vec3& y) { return std::sin(M_PI * y[0]) * std::cos(M_PI * y[1]); });
        ambient([](const Vec3& y) { return std::exp(0.5 * y[2]); });
        ambient([](const Vec3& y) { return y[0] * y[1] + 0.5 * y[2]; });
        ambient([](const Vec3& y) {
            return std::sin(M_PI * y[0]) * std::sin(M_PI * y[1]) * std::sin(M_PI * y[2]);
        });
        ambient([](const Vec3& y) { return (y[0] + y[1] + y[2]) * (y[0] + y[1] + y[2]); });
        ambient([](const Vec3& y) { return std::pow(std::abs(y[0] - 0.4), 0.7); });
        ambient([](const Vec3& y) { return std::abs(y[1] - 0.5); });
        ambient([](const Vec3& y) { return std::cos(M_PI * (y[0] + y[1])); });
        ambient([](const Vec3& y) {
            const double dx = y[0] - 0.5, dy = y[1] - 0.5, dz = y[2] - 0.5;
            return dx * dx + dy * dy + dz * dz;
        });
    }
    return corpus;
}

} // namespace besovkit
