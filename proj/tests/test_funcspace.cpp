#include "besovkit/funcspace.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace besovkit;

namespace {

std::shared_ptr<const WaveletSystem> make_system(const char* manifold, int D, int Dt, int J)
{
    auto uni = std::make_shared<const UnivariateSystem>(D, Dt);
    auto dec = std::make_shared<const Decomposition>(builtin_manifold(manifold));
    return std::make_shared<const WaveletSystem>(uni, dec, J);
}

} // namespace

TEST(BesovNorm, SinglePrimalWaveletWeight)
{
    auto sys = make_system("interval", 2, 2, 5);
    for (int j : {1, 3, 5}) {
        CoeffSequence e(sys->grid_ptr());
        e.set(j, sys->flat_index(j, {0, 1, {0, 0, 0}}), 1.0);
        auto field = sys->synthesize(e, 5);
        SpaceParams sp(std::const_pointer_cast<const WaveletSystem>(sys), {1.0, 2.0, 2.0, 1});
        EXPECT_NEAR(besov_norm_field(field, sp, 5), std::pow(2.0, j), 1e-10) << "j=" << j;
    }
}

TEST(BesovNorm, ConstantHasOnlyLevelZeroContribution)
{
    auto sys = make_system("interval", 1, 1, 5);
    auto one = PatchFunction::from_local(
        [](int, const std::array<double, 3>&) { return Complex(1.0, 0.0); });
    SpaceParams sp(sys, {0.6, 1.5, 2.0, 1});
    ASSERT_TRUE(sp.admissible);
    const double n5 = besov_norm(one, sp, 5);
    const double n3 = besov_norm(one, sp, 3);
    EXPECT_NEAR(n5, n3, 1e-12); // nothing beyond level 0
    EXPECT_GT(n5, 0.0);
}

TEST(BesovNorm, AdmissibilityEnforced)
{
    auto sys = make_system("interval", 2, 2, 4);
    auto one = PatchFunction::from_local(
        [](int, const std::array<double, 3>&) { return Complex(1.0, 0.0); });
    SpaceParams sp(sys, {0.0, 1.0, q_infinity, 1}); // equality branch needs q <= 2
    EXPECT_FALSE(sp.admissible);
    EXPECT_THROW(besov_norm(one, sp, 4), std::invalid_argument);
}

TEST(BesovNorm, TruncationConvergenceForSmoothFunctions)
{
    auto u = PatchFunction::from_local([](int, const std::array<double, 3>& x) {
        return Complex(std::sin(2.0 * M_PI * x[0]), 0.0);
    });
    {
        // Haar characterizes alpha < 1/2; at alpha = 0.4 the tails are summable
        auto sys = make_system("interval", 1, 1, 8);
        SpaceParams sp(sys, {0.4, 2.0, 2.0, 1});
        const double n6 = besov_norm(u, sp, 6);
        const double n8 = besov_norm(u, sp, 8);
        EXPECT_LT(std::abs(n8 - n6) / n6, 0.01);
    }
    {
        auto sys = make_system("interval", 2, 2, 8);
        SpaceParams sp(sys, {1.0, 2.0, 2.0, 1});
        const double n6 = besov_norm(u, sp, 6);
        const double n8 = besov_norm(u, sp, 8);
        EXPECT_LT(std::abs(n8 - n6) / n6, 0.01);
    }
}

TEST(Gramian, SelfGramianIsIdentity)
{
    for (auto [D, Dt] : {std::pair{1, 1}, {2, 2}, {2, 4}, {3, 3}}) {
        auto sys = make_system("interval", D, Dt, 4);
        auto G = gramian(*sys, *sys, 4);
        double max_offdiag = 0.0, min_diag = 1e300, max_diag = 0.0;
        for (const auto& [key, trips] : G.blocks()) {
            for (const auto& t : trips) {
                if (key.first == key.second && t.row == t.col) {
                    min_diag = std::min(min_diag, std::abs(t.value));
                    max_diag = std::max(max_diag, std::abs(t.value));
                } else {
                    max_offdiag = std::max(max_offdiag, std::abs(t.value));
                }
            }
        }
        EXPECT_NEAR(min_diag, 1.0, 1e-8) << "D=" << D << " Dt=" << Dt;
        EXPECT_NEAR(max_diag, 1.0, 1e-8);
        EXPECT_LT(max_offdiag, 1e-8);
    }
}

TEST(Gramian, CrossSystemBandedWithExactZeros)
{
    auto haar = make_system("interval", 1, 1, 3);
    auto s22 = make_system("interval", 2, 2, 3);
    auto G = gramian(*s22, *haar, 3);
    EXPECT_GT(G.nnz(), 0u);

    // disjoint-support pair: Haar dual at level 3 near x ~ 0.06,
    // (2,2) primal wavelet at level 3 near x ~ 0.6: structural zero
    EXPECT_EQ(G.get(3, 3, haar->flat_index(3, {0, 1, {0, 0, 0}}),
                    s22->flat_index(3, {0, 1, {5, 0, 0}})),
              Complex(0.0, 0.0));
    // the same-level band carries honest mass (aligned pairs may cancel, the
    // shifted neighbour does not)
    double block_max = 0.0;
    for (const auto& [key, trips] : G.blocks()) {
        if (key.first != 3 || key.second != 3) continue;
        for (const auto& t : trips) block_max = std::max(block_max, std::abs(t.value));
    }
    EXPECT_GT(block_max, 1e-3);
}

TEST(Gramian, MismatchedManifoldsRejected)
{
    auto a = make_system("interval", 1, 1, 3);
    auto b = make_system("square2", 1, 1, 3);
    EXPECT_THROW(gramian(*a, *b, 3), std::invalid_argument);
}

TEST(GramianDecay, IdentityIsVacuouslyOk)
{
    auto sys = make_system("interval", 2, 2, 4);
    auto G = gramian(*sys, *sys, 4, 1e-8);
    auto report = gramian_decay_check(G, *sys, *sys, 0.3);
    EXPECT_TRUE(report.ok);
    EXPECT_TRUE(report.vacuous);
}

TEST(GramianDecay, SplineToHaarSlopes)
{
    // Psi = (2,2), Phi = Haar: upward decay 2^{-l(1/2+1)} (smooth side),
    // downward limited by the Haar dual regularity: 2^{-|l|/2}
    auto haar = make_system("interval", 1, 1, 6);
    auto s22 = make_system("interval", 2, 2, 6);
    auto G = gramian(*s22, *haar, 6);
    auto report = gramian_decay_check(G, *s22, *haar, 0.3);
    EXPECT_LT(report.slope_up, -1.3);
    EXPECT_GT(report.slope_up, -1.7);
    EXPECT_LT(report.slope_down, -0.4);
    EXPECT_GT(report.slope_down, -0.7);
    EXPECT_TRUE(report.ok); // alpha = 0.3: -1.5 <= -0.9 and -0.5 <= -0.3

    // alpha above min{D^Phi, gamma^Psi} = 1 fails the steeper requirement
    auto bad = gramian_decay_check(G, *s22, *haar, 1.2);
    EXPECT_FALSE(bad.ok);
}

TEST(ChangeOfBasis, IdentityAndTwoAnalyses)
{
    auto s22 = make_system("interval", 2, 2, 6);
    auto s24 = make_system("interval", 2, 4, 6);

    // identity case
    auto Gss = gramian(*s22, *s22, 6, 1e-10);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss;
    CoeffSequence a(s22->grid_ptr());
    for (int j = 0; j <= 4; ++j)
        for (std::uint32_t i = 0; i < s22->grid().level_size(j); ++i) a.set(j, i, gauss(rng));
    auto same = change_of_basis(a, Gss);
    for (int j = 0; j <= 4; ++j)
        for (std::uint32_t i = 0; i < s22->grid().level_size(j); ++i)
            EXPECT_NEAR(std::abs(same.get(j, i) - a.get(j, i)), 0.0, 1e-8);

    // two independent analyses of a smooth u agree through the Gramian
    auto u = PatchFunction::from_local([](int, const std::array<double, 3>& x) {
        return Complex(std::sin(2.0 * M_PI * x[0]) + 0.5 * std::cos(4.0 * M_PI * x[0]), 0.0);
    });
    auto a_psi = s22->analyze(u, 6, 3);
    auto a_phi = s24->analyze(u, 6, 3);
    auto G = gramian(*s22, *s24, 6);
    auto mapped = change_of_basis(a_psi, G);
    for (int j = 0; j <= 4; ++j)
        for (std::uint32_t i = 0; i < s24->grid().level_size(j); ++i)
            EXPECT_NEAR(std::abs(mapped.get(j, i) - a_phi.get(j, i)), 0.0, 1e-6)
                << "j=" << j << " i=" << i;

    // zero maps to zero
    CoeffSequence zero(s22->grid_ptr());
    EXPECT_EQ(change_of_basis(zero, G).support_size(), 0u);
}

TEST(ChangeOfBasis, InverseGramianRecovers)
{
    // smooth pair and a generous truncation buffer: the tail the finite
    // Gramians cannot see decays with both systems' regularities
    auto s24 = make_system("interval", 2, 4, 9);
    auto s35 = make_system("interval", 3, 5, 9);
    auto G_fwd = gramian(*s24, *s35, 9);
    auto G_bwd = gramian(*s35, *s24, 9);

    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss;
    CoeffSequence a(s24->grid_ptr());
    for (int j = 0; j <= 2; ++j)
        for (std::uint32_t i = 0; i < s24->grid().level_size(j); ++i) a.set(j, i, gauss(rng));

    auto roundtrip = change_of_basis(change_of_basis(a, G_fwd), G_bwd);
    double max_err = 0.0, max_val = 0.0;
    for (int j = 0; j <= 2; ++j)
        for (std::uint32_t i = 0; i < s24->grid().level_size(j); ++i) {
            max_err = std::max(max_err, std::abs(roundtrip.get(j, i) - a.get(j, i)));
            max_val = std::max(max_val, std::abs(a.get(j, i)));
        }
    EXPECT_LT(max_err / max_val, 1e-6);
}

TEST(Equivalence, SameSystemRatiosAreOne)
{
    auto sys = make_system("interval", 2, 2, 5);
    auto corpus = default_corpus(sys->decomposition());
    ASSERT_EQ(corpus.size(), 10u);
    auto report = equivalence_ratio(corpus, sys, sys, {0.3, 2.0, 2.0, 1}, {4, 5}, 2);
    EXPECT_NEAR(report.min_ratio, 1.0, 1e-9);
    EXPECT_NEAR(report.max_ratio, 1.0, 1e-9);
}

TEST(Equivalence, HaarVsSplineBandIsStable)
{
    auto haar = make_system("interval", 1, 1, 7);
    auto s22 = make_system("interval", 2, 2, 7);
    auto corpus = default_corpus(haar->decomposition());
    auto report = equivalence_ratio(corpus, haar, s22, {0.3, 2.0, 2.0, 1}, {4, 5, 6, 7}, 2);
    ASSERT_EQ(report.per_j.size(), 4u);
    const auto& first = report.per_j.front();
    const auto& last = report.per_j.back();
    EXPECT_GT(first.min_ratio, 0.0);
    // the J=4 band is not exceeded by more than 15% at J=7
    EXPECT_GE(last.min_ratio, first.min_ratio / 1.15);
    EXPECT_LE(last.max_ratio, first.max_ratio * 1.15);
}

TEST(Embedding, SequenceNormDominatesL2)
{
    // b^alpha_{p,q} embeds into l2 for admissible tuples: fitted constant on
    // random data stays bounded on fresh draws
    auto sys = make_system("interval", 2, 2, 6);
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss;
    const BesovParams prm{0.75, 1.5, 1.5, 1};
    ASSERT_TRUE(admissible_tuple(prm.alpha, prm.p, prm.q, 1, true));
    double c_fit = 0.0;
    auto draw = [&]() {
        CoeffSequence a(sys->grid_ptr());
        for (int j = 0; j <= 6; ++j)
            for (std::uint32_t i = 0; i < sys->grid().level_size(j); i += 3)
                a.set(j, i, gauss(rng) * std::pow(2.0, -0.9 * j));
        return a;
    };
    for (int t = 0; t < 40; ++t) {
        auto a = draw();
        double l2 = 0.0;
        for (int j = 0; j <= 6; ++j)
            for (const auto& e : a.level(j)) l2 += std::norm(e.second);
        c_fit = std::max(c_fit, std::sqrt(l2) / quasi_norm(a, prm));
    }
    for (int t = 0; t < 40; ++t) {
        auto a = draw();
        double l2 = 0.0;
        for (int j = 0; j <= 6; ++j)
            for (const auto& e : a.level(j)) l2 += std::norm(e.second);
        EXPECT_LE(std::sqrt(l2), 1.05 * c_fit * quasi_norm(a, prm));
    }
}

TEST(Corpus, CubeSurfaceFunctionsEvaluate)
{
    auto dec = builtin_manifold("cube-surface");
    auto corpus = default_corpus(dec);
    ASSERT_EQ(corpus.size(), 10u);
    for (const auto& f : corpus) {
        const Complex v = f(2, {0.3, 0.7, 0.0});
        EXPECT_TRUE(std::isfinite(v.real()));
    }
}
