#include <gtest/gtest.h>

#include "specpoll/mapping.hpp"

using namespace specpoll;

TEST(Mapping, SemiboundedAtSixIsExact)
{
    auto ex = catalog::get_example("semibounded_square");
    auto check = check_mapping_at_n(*ex.op, ex.sequence, -2.0, 6);
    EXPECT_TRUE(check.passed()) << check.max_mismatch;
    EXPECT_LE(check.max_mismatch, 1e-9);
    ASSERT_EQ(check.forward.size(), check.resolvent_spectrum.size());
    for (const auto& [lambda, y] : check.forward)
        EXPECT_DOUBLE_EQ(y, 1.0 / (lambda + 2.0));
}

TEST(Mapping, ScalarTrialSpace)
{
    auto ex = catalog::get_example("semibounded_square");
    GalerkinSequence one{"f1", [](std::size_t) {
                             const double c = std::cos(1.0), s = std::sin(1.0);
                             return std::vector<SparseVector>{
                                 SparseVector{{catalog::e_plus(1), c}, {catalog::e_minus(1), s}}};
                         }};
    auto check = check_mapping_at_n(*ex.op, one, -2.0, 1);
    ASSERT_EQ(check.resolvent_spectrum.size(), 1u);
    EXPECT_NEAR(check.forward[0].first, 1.0, 1e-14);
    EXPECT_NEAR(check.resolvent_spectrum[0], 1.0 / 3.0, 1e-14);
}

TEST(Mapping, ProjRotatedImages)
{
    const double theta = 0.7;
    auto ex = catalog::get_example("proj_rotated", {{"theta", theta}});
    auto check = check_mapping_at_n(*ex.op, ex.sequence, -1.0, 5);
    EXPECT_TRUE(check.passed());
    const double c2 = std::cos(theta) * std::cos(theta);
    std::vector<double> expected{0.5, 1.0, 1.0 / (1.0 + c2)};
    std::vector<double> got = check.resolvent_spectrum;
    EXPECT_LT(hausdorff(got, expected), 1e-13);
}

TEST(Mapping, OrderReversal)
{
    auto ex = catalog::get_example("optimality_blocks");
    auto check = check_mapping_at_n(*ex.op, ex.sequence, 0.0, 12);
    // sorted A-side eigenvalues map to reverse-sorted resolvent eigenvalues
    const auto& r = check.resolvent_spectrum;
    for (std::size_t i = 0; i < check.forward.size(); ++i)
        EXPECT_NEAR(check.forward[i].second, r[r.size() - 1 - i], 1e-12);
}

TEST(Mapping, SweepOverSemiboundedCatalog)
{
    std::vector<std::size_t> levels{2, 3, 5, 8, 13, 21, 34, 55};
    for (const char* name : {"proj_rotated", "semibounded_square", "double_eigenvalue", "sign_multiplication",
                             "optimality_blocks"}) {
        auto ex = catalog::get_example(name);
        auto shifts = default_shifts(*ex.op);
        for (const auto& c : check_mapping_sweep(*ex.op, ex.sequence, shifts, levels))
            EXPECT_LE(c.max_mismatch, 1e-9) << name << " a=" << c.a << " n=" << c.n;
    }
}

TEST(Mapping, ShiftPreconditions)
{
    auto semi = catalog::get_example("semibounded_square");
    EXPECT_THROW(check_mapping_at_n(*semi.op, semi.sequence, -1.0, 3), DomainError);
    auto ind = catalog::get_example("indefinite_integer");
    EXPECT_THROW(check_mapping_at_n(*ind.op, ind.sequence, -10.0, 3), DomainError);
}

TEST(Mapping, LimitSetsCorrespond)
{
    auto ex = catalog::get_example("semibounded_square");
    std::vector<std::size_t> schedule{20, 40, 60, 80, 100, 120};
    auto report = check_limit_mapping(*ex.op, ex.sequence, -2.0, {-1.5, 10.0}, schedule);
    EXPECT_TRUE(report.passed()) << report.center_mismatch;
    EXPECT_TRUE(report.zero_cluster);
    // ess {-1, 0} maps to {1, 1/2}
    auto ess = report.inverse.centers_with({ClusterLabel::essential, ClusterLabel::pollution});
    ASSERT_EQ(ess.size(), 2u);
    EXPECT_NEAR(ess[0], 0.5, 1e-3);
    EXPECT_NEAR(ess[1], 1.0, 1e-12);

    auto proj = catalog::get_example("proj_rotated");
    auto r2 = check_limit_mapping(*proj.op, proj.sequence, -1.0, {-0.5, 1.5}, schedule);
    EXPECT_TRUE(r2.passed());
    EXPECT_FALSE(r2.zero_cluster);
}

TEST(Mapping, IdentityMapsToSingleton)
{
    BlockOperator id(
        "identity",
        [](std::size_t n) {
            return SymBlock{{catalog::e_plus(n), catalog::e_minus(n)}, Eigen::MatrixXd::Identity(2, 2)};
        },
        [](BasisIndex i) { return std::optional<std::size_t>((i.id + 1) / 2); }, 1.0,
        SpectralTruth({1.0}, [](double, double) { return std::vector<Eigenvalue>{}; }), 1);
    auto seq = catalog::get_example("semibounded_square").sequence;
    std::vector<std::size_t> schedule{3, 5, 8, 13};
    auto report = check_limit_mapping(id, seq, -1.0, {0.0, 2.0}, schedule);
    ASSERT_EQ(report.inverse.clusters.size(), 1u);
    EXPECT_NEAR(report.inverse.clusters[0].center, 0.5, 1e-14);
    EXPECT_TRUE(report.passed());
}

TEST(Mapping, IndefiniteFailureDemo)
{
    std::vector<std::size_t> levels{1, 2, 3, 5, 10, 50, 200};
    auto report = demonstrate_mapping_failure_indefinite(0.5, levels);
    EXPECT_TRUE(report.contradiction());
    EXPECT_NEAR(report.margin, 1.0, 1e-15);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        EXPECT_LE(report.inverse_radius[i], 1.0 + 1e-12);
        EXPECT_NEAR(report.direct_value[i], levels[i] * std::sin(0.5 / levels[i]), 1e-12);
    }
    EXPECT_NEAR(catalog::mapping_impossible_angle(0.5, 2), std::numbers::pi / 4 - 0.125, 1e-16);
    EXPECT_THROW(demonstrate_mapping_failure_indefinite(1.5, levels), InvalidArgument);
}
