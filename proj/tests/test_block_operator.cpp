#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <random>

#include "specpoll/block_operator.hpp"
#include "specpoll/catalog.hpp"

using namespace specpoll;

namespace
{

SparseVector random_vector(std::mt19937& rng, std::size_t max_index, std::size_t from = 1)
{
    std::uniform_int_distribution<std::size_t> idx(from, max_index);
    std::normal_distribution<double> val;
    std::vector<SparseEntry> e;
    for (int k = 0; k < 5; ++k)
        e.push_back({BasisIndex{idx(rng)}, val(rng)});
    return SparseVector(std::move(e));
}

// A dense copy of the operator on indices [0, size), built from the blocks.
Eigen::MatrixXd dense(const BlockOperator& op, std::size_t blocks, std::size_t size)
{
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size, size);
    for (std::size_t k = op.first_block(); k <= blocks; ++k) {
        const auto& b = op.block(k).block;
        for (std::size_t i = 0; i < b.dimension(); ++i)
            for (std::size_t j = 0; j < b.dimension(); ++j)
                m(b.indices[i].id, b.indices[j].id) = b.matrix(i, j);
    }
    return m;
}

Eigen::VectorXd to_dense(const SparseVector& v, std::size_t size)
{
    Eigen::VectorXd x = Eigen::VectorXd::Zero(size);
    for (const auto& e : v.entries())
        x(e.index.id) = e.value;
    return x;
}

} // namespace

TEST(BlockOperator, SelfAdjointPairingOnRandomVectors)
{
    std::mt19937 rng(11);
    for (const auto& name : catalog::example_names()) {
        auto ex = catalog::get_example(name);
        if (!ex.op)
            continue;
        const std::size_t from = name == "double_eigenvalue" ? 0 : 1;
        for (int t = 0; t < 20; ++t) {
            auto u = random_vector(rng, 40, from);
            auto v = random_vector(rng, 40, from);
            const double lhs = u.dot(ex.op->apply(v));
            const double rhs = ex.op->apply(u).dot(v);
            EXPECT_NEAR(lhs, rhs, 1e-10 * (1.0 + std::abs(lhs))) << name;
        }
    }
}

TEST(BlockOperator, SemiboundedSquareBlockHasClosedFormSpectrum)
{
    auto ex = catalog::get_example("semibounded_square");
    for (std::size_t n = 1; n <= 30; ++n) {
        const auto& b = ex.op->block(n);
        EXPECT_NEAR(b.eigenvalues(0), -1.0, 1e-12 * n * n);
        EXPECT_NEAR(b.eigenvalues(1), double(n * n), 1e-12 * n * n);
        // the top eigenvector is (cos 1/n, sin 1/n) up to sign
        const double overlap = b.eigenvectors(0, 1) * std::cos(1.0 / n) + b.eigenvectors(1, 1) * std::sin(1.0 / n);
        EXPECT_NEAR(std::abs(overlap), 1.0, 1e-12);
    }
}

TEST(BlockOperator, FunctionalCalculusMatchesMatrixFunctions)
{
    auto ex = catalog::get_example("semibounded_square");
    const double a = -2.0;
    const std::size_t size = 2 * 12 + 1;
    Eigen::MatrixXd shifted = dense(*ex.op, 12, size) - a * Eigen::MatrixXd::Identity(size, size);
    // index 0 is not part of this operator; pad it with 1 so the root is defined
    shifted(0, 0) = 1.0;
    const Eigen::MatrixXd root = shifted.sqrt();
    const Eigen::MatrixXd inverse = shifted.inverse();
    std::mt19937 rng(3);
    for (int t = 0; t < 10; ++t) {
        auto v = random_vector(rng, size - 1);
        Eigen::VectorXd x = to_dense(v, size);
        Eigen::VectorXd r1 = to_dense(ex.op->apply_function(FunctionTag::sqrt_shift(), a, v), size);
        Eigen::VectorXd r2 = to_dense(ex.op->apply_function(FunctionTag::resolvent(), a, v), size);
        EXPECT_LT((r1 - root * x).norm(), 1e-10 * x.norm() * 12);
        EXPECT_LT((r2 - inverse * x).norm(), 1e-12 * x.norm());
    }
}

TEST(BlockOperator, InverseCompositionsRecoverTheVector)
{
    std::mt19937 rng(5);
    for (const char* name : {"semibounded_square", "proj_rotated", "double_eigenvalue", "optimality_blocks"}) {
        auto ex = catalog::get_example(name);
        const double a = *ex.op->lower_bound() - 1.0;
        const std::size_t from = std::string(name) == "double_eigenvalue" ? 0 : 1;
        for (int t = 0; t < 10; ++t) {
            auto v = random_vector(rng, 60, from);
            auto w = ex.op->apply_function(FunctionTag::inv_sqrt_shift(), a,
                                           ex.op->apply_function(FunctionTag::sqrt_shift(), a, v));
            EXPECT_LT((w - v).norm(), 1e-12 * (1.0 + v.norm())) << name;
            auto shifted = ex.op->apply(v);
            shifted.axpy(-a, v);
            auto back = ex.op->apply_function(FunctionTag::resolvent(), a, shifted);
            EXPECT_LT((back - v).norm(), 1e-12 * (1.0 + v.norm())) << name;
            auto half = ex.op->apply_function(FunctionTag::neg_power(0.5), a, v);
            auto both = ex.op->apply_function(FunctionTag::neg_power(0.5), a, half);
            auto res = ex.op->apply_function(FunctionTag::resolvent(), a, v);
            EXPECT_LT((both - res).norm(), 1e-12 * (1.0 + v.norm())) << name;
        }
    }
}

TEST(BlockOperator, DomainErrors)
{
    auto semi = catalog::get_example("semibounded_square");
    auto v = SparseVector::unit(catalog::e_plus(2));
    EXPECT_THROW((void)semi.op->apply_function(FunctionTag::sqrt_shift(), -1.0, v), DomainError);
    EXPECT_THROW((void)semi.op->apply_function(FunctionTag::sqrt_shift(), 0.0, v), DomainError);
    auto indef = catalog::get_example("indefinite_integer");
    EXPECT_THROW((void)indef.op->apply_function(FunctionTag::inv_sqrt_shift(), -5.0, v), DomainError);
    EXPECT_NO_THROW((void)indef.op->apply_function(FunctionTag::resolvent(), 0.5, v));
    EXPECT_THROW((void)indef.op->apply_function(FunctionTag::resolvent(), 2.0, v), DomainError);
    // e_0 is outside every block of semibounded_square
    EXPECT_THROW((void)semi.op->apply(SparseVector::unit(BasisIndex{0})), StructuralError);
}

TEST(BlockOperator, StructuralChecksRejectBadBlocks)
{
    auto loc = [](BasisIndex i) { return std::optional<std::size_t>((i.id + 1) / 2); };
    BlockOperator asym(
        "asym",
        [](std::size_t n) {
            Eigen::MatrixXd m(2, 2);
            m << 0.0, 1.0, 2.0, 0.0;
            return SymBlock{{BasisIndex{2 * n - 1}, BasisIndex{2 * n}}, m};
        },
        loc, std::nullopt, std::nullopt, 1);
    EXPECT_THROW((void)asym.block(1), StructuralError);
    BlockOperator below(
        "below", [](std::size_t n) { return SymBlock{{BasisIndex{2 * n - 1}, BasisIndex{2 * n}}, -Eigen::MatrixXd::Identity(2, 2)}; },
        loc, 0.0, std::nullopt, 1);
    EXPECT_THROW((void)below.block(1), StructuralError);
}

TEST(BlockOperator, ResolventTruthMapsSpectrum)
{
    auto ex = catalog::get_example("semibounded_square");
    auto r = function_operator(*ex.op, FunctionTag::resolvent(), -2.0);
    ASSERT_TRUE(r.truth());
    // ess {-1} -> {1}, plus 0 from the unbounded part
    EXPECT_TRUE(r.truth()->is_essential(1.0, 1e-15));
    EXPECT_TRUE(r.truth()->is_essential(0.0, 0.0));
    auto d = r.truth()->discrete_in(0.05, 0.9);
    // 1/(k^2 + 2) for k = 1..4
    ASSERT_EQ(d.size(), 4u);
    EXPECT_NEAR(d[3].value, 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(d[0].value, 1.0 / 18.0, 1e-15);
}

TEST(BlockOperator, RankOneUpdateKeepsEssentialSpectrum)
{
    auto ex = catalog::get_example("semibounded_square");
    auto k = with_rank_one(*ex.op, catalog::e_plus(1), 0.3);
    EXPECT_EQ(k.truth()->essential(), ex.op->truth()->essential());
    const auto& b = k.block(1);
    // block 1 changes: its eigenvalues become the new discrete values
    auto d = k.truth()->discrete_in(-0.999, 1.5);
    ASSERT_EQ(d.size(), 2u);
    EXPECT_NEAR(d[0].value, b.eigenvalues(0), 1e-12);
    EXPECT_NEAR(d[1].value, b.eigenvalues(1), 1e-12);
    EXPECT_EQ(k.block(2).block.matrix, ex.op->block(2).block.matrix);
}

TEST(BlockOperator, IndefiniteIntegerSwapsThePair)
{
    // A = sum_n n (|e_n^+><e_n^-| + |e_n^-><e_n^+|), so A e_2^- = 2 e_2^+
    const auto op = *catalog::get_example("indefinite_integer").op;
    const auto out = op.apply(SparseVector::unit(catalog::e_minus(2)));
    const Eigen::VectorXd expect = dense(op, 2, 5) * to_dense(SparseVector::unit(catalog::e_minus(2)), 5);
    EXPECT_DOUBLE_EQ(out[catalog::e_plus(2)], 2.0);
    EXPECT_EQ(out[catalog::e_minus(2)], 0.0);
    EXPECT_TRUE(to_dense(out, 5).isApprox(expect, 1e-15));
}

TEST(BlockOperator, SqrtShiftOnAnEigenvector)
{
    const auto op = *catalog::get_example("semibounded_square").op;
    // f_1^+ from a dense eigendecomposition of the first block
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(op.block(1).block.matrix);
    ASSERT_NEAR(eig.eigenvalues()(1), 1.0, 1e-14);
    const Eigen::Vector2d f = eig.eigenvectors().col(1);
    const SparseVector v{{catalog::e_plus(1), f(0)}, {catalog::e_minus(1), f(1)}};
    const auto out = op.apply_function(FunctionTag::sqrt_shift(), -2.0, v);
    EXPECT_NEAR(out[catalog::e_plus(1)], std::sqrt(3.0) * f(0), 1e-14);
    EXPECT_NEAR(out[catalog::e_minus(1)], std::sqrt(3.0) * f(1), 1e-14);
}

TEST(BlockOperator, TruthSpectrumInWindow)
{
    const auto semi = *catalog::get_example("semibounded_square").op;
    const auto pts = truth_spectrum_in(semi, -2.0, 5.0);
    ASSERT_EQ(pts.size(), 3U);
    EXPECT_EQ(pts[0].value, -1.0);
    EXPECT_EQ(pts[0].kind, SpectralKind::essential);
    EXPECT_FALSE(pts[0].multiplicity.has_value());
    EXPECT_EQ(pts[1].value, 1.0);
    EXPECT_EQ(pts[1].kind, SpectralKind::discrete);
    EXPECT_EQ(pts[1].multiplicity, 1U);
    EXPECT_EQ(pts[2].value, 4.0);
    EXPECT_EQ(pts[2].multiplicity, 1U);

    const auto proj = *catalog::get_example("proj_rotated").op;
    const auto p = truth_spectrum_in(proj, -0.5, 1.5);
    ASSERT_EQ(p.size(), 2U);
    EXPECT_EQ(p[0].value, 0.0);
    EXPECT_EQ(p[1].value, 1.0);
    EXPECT_EQ(p[1].kind, SpectralKind::essential);

    EXPECT_TRUE(truth_spectrum_in(semi, 2.0, 2.0).empty());
}

TEST(BlockOperator, ClosedFormEigensystemMatchesSolver)
{
    for (const char* name : {"semibounded_square", "optimality_blocks"}) {
        const auto op = *catalog::get_example(name).op;
        for (std::size_t k : {1u, 2u, 9u, 300u}) {
            const auto& b = op.block(k);
            ASSERT_TRUE(b.block.eigensystem.has_value());
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b.block.matrix);
            EXPECT_TRUE(b.eigenvalues.isApprox(eig.eigenvalues(), 1e-14)) << name << " " << k;
        }
    }
    // a wrong eigensystem is rejected
    const BlockOperator bad(
        "bad",
        [](std::size_t n) {
            return SymBlock({catalog::e_plus(n), catalog::e_minus(n)}, Eigen::Matrix2d(Eigen::Vector2d(1.0, 2.0).asDiagonal()),
                            SymBlock::Eigensystem{Eigen::Vector2d(1.0, 3.0), Eigen::Matrix2d::Identity()});
        },
        [](BasisIndex i) { return catalog::detail::pair_locator(i, false); }, std::nullopt, std::nullopt, 1);
    EXPECT_THROW((void)bad.block(1), StructuralError);
}
