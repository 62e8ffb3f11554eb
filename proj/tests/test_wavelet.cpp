#include "besovkit/wavelet.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace besovkit;

namespace {

std::shared_ptr<WaveletSystem> make_system(const char* manifold, int D, int Dt, int J)
{
    auto uni = std::make_shared<const UnivariateSystem>(D, Dt);
    auto dec = std::make_shared<const Decomposition>(builtin_manifold(manifold));
    return std::make_shared<WaveletSystem>(uni, dec, J);
}

} // namespace

TEST(WaveletGrid, CountsAndAxioms)
{
    auto sys = make_system("interval", 1, 1, 5);
    const auto& g = sys->grid();
    EXPECT_EQ(g.level_size(0), 2u);
    for (int j = 1; j <= 5; ++j) EXPECT_EQ(g.level_size(j), std::size_t{1} << j);

    for (int j = 0; j + 3 <= 5; ++j) EXPECT_TRUE(check_net(g, j).ok);
    for (int j = 0; j <= 5; ++j) EXPECT_TRUE(check_separation(g, j, 8).ok);
    EXPECT_NO_THROW(cardinality_check(g));

    auto sys2 = make_system("cube-surface", 2, 2, 3);
    const auto& g2 = sys2->grid();
    EXPECT_EQ(g2.level_size(0), 6u * 4u);
    for (int j = 1; j <= 3; ++j) EXPECT_EQ(g2.level_size(j), 6u * 3u * (1u << (2 * j)));
    for (int j = 0; j + 2 <= 3; ++j) EXPECT_TRUE(check_net(g2, j, 2).ok);
}

TEST(WaveletSystemCtor, ParityRejected)
{
    EXPECT_THROW(make_system("interval", 2, 3, 3), std::invalid_argument);
}

TEST(Biorthogonality, UnivariateCrossScaleDelta)
{
    // <psi_{s,k}, psi~_{s',k'}> = delta via exact line-function inner products
    for (auto [D, Dt] : {std::pair{1, 1}, {2, 2}, {2, 4}, {3, 3}}) {
        UnivariateSystem uni(D, Dt);
        const int target = 5;
        struct Item {
            AxisKind kind;
            int s, k;
        };
        std::vector<Item> items;
        items.push_back({AxisKind::scaling, 1, 0});
        items.push_back({AxisKind::scaling, 1, 1});
        for (int s = 1; s + 1 <= target; ++s)
            for (int k = 0; k < (1 << s); k += std::max(1, (1 << s) / 4))
                items.push_back({AxisKind::wavelet, s, k});

        for (const auto& a : items)
            for (const auto& b : items) {
                LineFn fa = axis_line_fn(uni, a.kind, a.s, a.k, target, false);
                LineFn fb = axis_line_fn(uni, b.kind, b.s, b.k, target, true);
                const double v = line_inner(fa, fb, uni.corr_pd());
                const bool same = a.kind == b.kind && a.s == b.s && a.k == b.k;
                // biorthogonal across scales within V_target
                if (same)
                    EXPECT_NEAR(v, 1.0, 1e-10) << "D=" << D << " Dt=" << Dt;
                else if (a.kind == AxisKind::wavelet && b.kind == AxisKind::wavelet)
                    EXPECT_NEAR(v, 0.0, 1e-10);
                else if (a.kind == AxisKind::scaling && b.kind == AxisKind::scaling)
                    EXPECT_NEAR(v, a.k == b.k ? 1.0 : 0.0, 1e-10);
                else if (a.kind == AxisKind::scaling && b.kind == AxisKind::wavelet)
                    EXPECT_NEAR(v, 0.0, 1e-10); // V_1 is orthogonal to dual wavelets
                else if (a.kind == AxisKind::wavelet && b.kind == AxisKind::scaling &&
                         b.s > a.s + 0) {
                    // primal wavelet against coarser dual scaling need not vanish
                } else if (a.kind == AxisKind::wavelet && b.kind == AxisKind::scaling &&
                           b.s == 1) {
                    EXPECT_NEAR(v, 0.0, 1e-10); // wavelets are orthogonal to dual V_1
                }
            }
    }
}

TEST(Normalization, BalancedNormsWithinBand)
{
    for (auto [D, Dt] : {std::pair{1, 1}, {2, 2}, {2, 4}, {3, 3}}) {
        auto sys = make_system("interval", D, Dt, 5);
        for (int level = 0; level <= 5; ++level) {
            const int t_hi = level == 0 ? 0 : 1;
            for (int type = level == 0 ? 0 : 1; type <= t_hi; ++type) {
                const double n = sys->normalized_l2_norm(level, type);
                EXPECT_GE(n, 0.5) << "D=" << D << " Dt=" << Dt << " level=" << level;
                EXPECT_LE(n, 2.0) << "D=" << D << " Dt=" << Dt << " level=" << level;
            }
        }
    }
    // tensor types on the cube surface
    auto sys = make_system("cube-surface", 2, 2, 3);
    for (int level = 1; level <= 3; ++level)
        for (int type = 1; type <= 3; ++type) {
            const double n = sys->normalized_l2_norm(level, type);
            EXPECT_GE(n, 0.5);
            EXPECT_LE(n, 2.0);
        }
}

TEST(Analyze, HaarClosedFormCoefficientsOfX)
{
    auto sys = make_system("interval", 1, 1, 6);
    auto u = PatchFunction::from_local(
        [](int, const std::array<double, 3>& x) { return Complex(x[0], 0.0); });
    auto a = sys->analyze(u, 6, 2);

    // level 0: scaling coefficients sqrt(2) (2k+1)/8
    for (int k = 0; k < 2; ++k) {
        const Complex c = a.get(0, sys->flat_index(0, {0, 0, {k, 0, 0}}));
        EXPECT_NEAR(c.real(), std::sqrt(2.0) * (2 * k + 1) / 8.0, 1e-13);
    }
    // levels j >= 1: all coefficients -2^{-3j/2}/4
    for (int j = 1; j <= 6; ++j)
        for (int k = 0; k < (1 << j); ++k) {
            const Complex c = a.get(j, sys->flat_index(j, {0, 1, {k, 0, 0}}));
            EXPECT_NEAR(c.real(), -std::pow(2.0, -1.5 * j) / 4.0, 1e-12) << "j=" << j;
        }
}

TEST(Analyze, ConstantHasOnlyLevelZero)
{
    for (auto [D, Dt] : {std::pair{1, 1}, {2, 2}, {2, 4}}) {
        auto sys = make_system("interval", D, Dt, 5);
        auto one = PatchFunction::from_local(
            [](int, const std::array<double, 3>&) { return Complex(1.0, 0.0); });
        auto a = sys->analyze(one, 5, 2);
        for (int j = 1; j <= 5; ++j)
            for (const auto& e : a.level(j))
                EXPECT_NEAR(std::abs(e.second), 0.0, 1e-11) << "D=" << D << " j=" << j;
        double level0 = 0.0;
        for (const auto& e : a.level(0)) level0 += std::norm(e.second);
        EXPECT_GT(level0, 0.1);
    }
}

TEST(AnalyzeSynthesize, ExactRoundTrip)
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss;
    for (auto [D, Dt] : {std::pair{1, 1}, {2, 2}, {3, 3}}) {
        auto sys = make_system("interval", D, Dt, 5);
        CoeffSequence a(sys->grid_ptr());
        for (int j = 0; j <= 5; ++j)
            for (std::uint32_t i = 0; i < sys->grid().level_size(j); ++i)
                a.set(j, i, Complex(gauss(rng), gauss(rng)));
        auto field = sys->synthesize(a, 5);
        auto back = sys->analyze_field(field, 5);
        for (int j = 0; j <= 5; ++j)
            for (std::uint32_t i = 0; i < sys->grid().level_size(j); ++i)
                EXPECT_NEAR(std::abs(back.get(j, i) - a.get(j, i)), 0.0, 1e-8)
                    << "D=" << D << " j=" << j;
    }
}

TEST(AnalyzeSynthesize, RoundTrip2D)
{
    std::mt19937_64 rng(9);
    std::normal_distribution<double> gauss;
    auto sys = make_system("square2", 2, 2, 3);
    CoeffSequence a(sys->grid_ptr());
    for (int j = 0; j <= 3; ++j)
        for (std::uint32_t i = 0; i < sys->grid().level_size(j); ++i)
            a.set(j, i, Complex(gauss(rng), 0.3 * gauss(rng)));
    auto field = sys->synthesize(a, 3);
    auto back = sys->analyze_field(field, 3);
    for (int j = 0; j <= 3; ++j)
        for (std::uint32_t i = 0; i < sys->grid().level_size(j); ++i)
            EXPECT_NEAR(std::abs(back.get(j, i) - a.get(j, i)), 0.0, 1e-9) << "j=" << j;
}

TEST(AnalyzeSynthesize, SingleWaveletDelta)
{
    auto sys = make_system("interval", 2, 2, 4);
    CoeffSequence e(sys->grid_ptr());
    const std::uint32_t idx = sys->flat_index(2, {0, 1, {1, 0, 0}});
    e.set(2, idx, 1.0);
    auto field = sys->synthesize(e, 4);
    auto back = sys->analyze_field(field, 4);
    for (int j = 0; j <= 4; ++j)
        for (std::uint32_t i = 0; i < sys->grid().level_size(j); ++i)
            EXPECT_NEAR(std::abs(back.get(j, i) - ((j == 2 && i == idx) ? 1.0 : 0.0)), 0.0, 1e-10);
}

TEST(Analyze, PointwisePathMatchesExactPathForSmoothData)
{
    // sin(2 pi x) is periodic-smooth: quadrature analysis at two different
    // oversampling depths must agree
    auto sys = make_system("interval", 2, 2, 5);
    auto u = PatchFunction::from_local([](int, const std::array<double, 3>& x) {
        return Complex(std::sin(2.0 * M_PI * x[0]), 0.0);
    });
    auto a1 = sys->analyze(u, 5, 1);
    auto a2 = sys->analyze(u, 5, 3);
    for (int j = 0; j <= 5; ++j)
        for (std::uint32_t i = 0; i < sys->grid().level_size(j); ++i)
            EXPECT_NEAR(std::abs(a1.get(j, i) - a2.get(j, i)), 0.0, 1e-9);
}

TEST(Riesz, L2NormEquivalenceStableAcrossTrials)
{
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss;
    for (auto [D, Dt] : {std::pair{1, 1}, {2, 2}, {2, 4}}) {
        auto sys = make_system("interval", D, Dt, 6);
        std::array<double, 2> lo_j{1e300, 1e300}, hi_j{0.0, 0.0};
        for (std::size_t jc = 0; jc < 2; ++jc) {
            const int J = jc == 0 ? 5 : 6;
            for (int trial = 0; trial < 50; ++trial) {
                CoeffSequence a(sys->grid_ptr());
                for (int j = 0; j <= J; ++j)
                    for (std::uint32_t i = 0; i < sys->grid().level_size(j); ++i)
                        a.set(j, i, gauss(rng));
                auto field = sys->synthesize(a, J);
                const double fnorm = sys->field_l2_norm(field);
                double l2 = 0.0;
                for (int j = 0; j <= J; ++j)
                    for (const auto& e : a.level(j)) l2 += std::norm(e.second);
                const double ratio = fnorm / std::sqrt(l2);
                lo_j[jc] = std::min(lo_j[jc], ratio);
                hi_j[jc] = std::max(hi_j[jc], ratio);
            }
        }
        EXPECT_LT(hi_j[1] / lo_j[1], 4.0)
            << "D=" << D << " Dt=" << Dt << " [" << lo_j[1] << "," << hi_j[1] << "]";
        EXPECT_GT(lo_j[1], 0.1);
        // Riesz constants stable across the truncation level
        EXPECT_LT(std::abs(lo_j[1] - lo_j[0]) / lo_j[0], 0.25);
        EXPECT_LT(std::abs(hi_j[1] - hi_j[0]) / hi_j[0], 0.25);
    }
}

TEST(FieldNorm, HaarExactValues)
{
    auto sys = make_system("interval", 1, 1, 3);
    CoeffSequence a(sys->grid_ptr());
    a.set(0, 0, 3.0);
    a.set(0, 1, 4.0);
    auto field = sys->synthesize(a, 3);
    // Haar is orthonormal: field norm equals coefficient norm
    EXPECT_NEAR(sys->field_l2_norm(field), 5.0, 1e-12);
    // pointwise: sqrt(2)*3 on [0, 1/2)
    EXPECT_NEAR(field.eval(0, {0.2, 0, 0}).real(), 3.0 * std::sqrt(2.0), 1e-12);
}

TEST(Moments, CancellationOrders)
{
    for (auto [D, Dt] : {std::pair{1, 1}, {2, 2}, {2, 4}, {3, 3}}) {
        auto sys = make_system("interval", D, Dt, 4);
        auto report = sys->moments_check(std::max(D, Dt));
        EXPECT_TRUE(report.ok) << "D=" << D << " Dt=" << Dt
                               << " primal=" << report.max_abs_primal
                               << " dual=" << report.max_abs_dual;
        EXPECT_LT(report.max_abs_primal, 1e-8);
        EXPECT_LT(report.max_abs_dual, 1e-8);
        // degree D_dual is generically non-vanishing
        EXPECT_GT(report.first_nonzero_primal, 1e-6);
        if (D == 1) {
            EXPECT_EQ(report.n_skipped_wrapping, 0);
        } else {
            EXPECT_GT(report.n_skipped_wrapping, 0);
        }
    }
}

TEST(Support, DiametersAndAnchors)
{
    auto haar = make_system("interval", 1, 1, 4);
    auto rh = haar->support_check();
    EXPECT_TRUE(rh.ok);
    for (double v : rh.scaled_diam) EXPECT_NEAR(v, 1.0, 0.02); // diam ~ 2^{-j}

    auto s22 = make_system("interval", 2, 2, 5);
    auto r22 = s22->support_check();
    EXPECT_TRUE(r22.ok);
    // unwrapped levels: diam = 3 * 2^{-j}
    EXPECT_NEAR(r22.scaled_diam.back(), 3.0, 0.05);
    EXPECT_TRUE(r22.anchors_contained);
}

TEST(Decay, SmoothFunctionRateWithHaar)
{
    auto sys = make_system("interval", 1, 1, 8);
    auto u = PatchFunction::from_local([](int, const std::array<double, 3>& x) {
        return Complex(std::sin(2.0 * M_PI * x[0]), 0.0);
    });
    auto fit = sys->coefficient_decay_check(u, 1.0, 2);
    // Haar coefficients of a smooth function decay like 2^{-3j/2}
    EXPECT_NEAR(fit.rho, 1.5, 0.1);
    EXPECT_GE(fit.rho, 1.0); // >= s
    EXPECT_TRUE(fit.ok);
}

TEST(Decay, ConstantIsFlat)
{
    auto sys = make_system("interval", 2, 2, 6);
    auto one = PatchFunction::from_local(
        [](int, const std::array<double, 3>&) { return Complex(1.0, 0.0); });
    auto fit = sys->coefficient_decay_check(one, 1.5, 2);
    EXPECT_TRUE(fit.all_zero);
    EXPECT_TRUE(std::isinf(fit.rho));
    EXPECT_TRUE(fit.ok);
}

TEST(Decay, KinkSlowsDecayLocally)
{
    auto sys = make_system("interval", 2, 2, 7);
    // periodic-smooth away from a kink at x = 1/3 (off the dyadic lattice)
    auto kinky = PatchFunction::from_local([](int, const std::array<double, 3>& x) {
        return Complex(std::abs(std::sin(M_PI * (x[0] - 1.0 / 3.0))), 0.0);
    });
    auto smooth = PatchFunction::from_local([](int, const std::array<double, 3>& x) {
        return Complex(std::cos(2.0 * M_PI * x[0]), 0.0);
    });
    auto fk = sys->coefficient_decay_check(kinky, 1.5, 2);
    auto fs = sys->coefficient_decay_check(smooth, 2.0, 2);
    EXPECT_LT(fk.rho, fs.rho); // kink limits the global max-coefficient decay
    EXPECT_GT(fs.rho, 2.0);
    // the kink rate is ~ d/2 + 1 = 3/2
    EXPECT_NEAR(fk.rho, 1.5, 0.25);
}

TEST(BasisSpec, Parsing)
{
    auto [d1, t1] = parse_basis_spec("spline:D=2,Dt=4,mode=periodic");
    EXPECT_EQ(d1, 2);
    EXPECT_EQ(t1, 4);
    auto [d2, t2] = parse_basis_spec("spline:D=1,Dt=1");
    EXPECT_EQ(d2, 1);
    EXPECT_EQ(t2, 1);
    EXPECT_THROW(parse_basis_spec("fourier:n=4"), std::invalid_argument);
    EXPECT_THROW(parse_basis_spec("spline:D=3,Dt=1"), std::invalid_argument);
}
