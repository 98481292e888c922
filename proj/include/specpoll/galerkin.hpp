#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "block_operator.hpp"
#include "errors.hpp"
#include "sparse_vector.hpp"

namespace specpoll
{

/// Anything that acts linearly on finitely supported vectors.
template <class Op>
concept LinearOperator = requires(const Op& op, const SparseVector& v) {
    { op.apply(v) } -> std::convertible_to<SparseVector>;
};

enum class RegularityClass
{
    operator_regular,
    form_regular,
    unknown,
};

inline const char* to_string(RegularityClass r)
{
    switch (r) {
    case RegularityClass::operator_regular:
        return "operator_regular";
    case RegularityClass::form_regular:
        return "form_regular";
    case RegularityClass::unknown:
        return "unknown";
    }
    return "unknown";
}

/// Sequence of finite-dimensional trial spaces, given by spanning vectors per level.
struct GalerkinSequence
{
    using SpanGenerator = std::function<std::vector<SparseVector>(std::size_t)>;

    std::string name;
    SpanGenerator span_gen;
    RegularityClass regularity = RegularityClass::unknown;
    /// Smallest level for which the generator is defined.
    std::size_t first_level = 1;

    [[nodiscard]] std::vector<SparseVector> span(std::size_t n) const
    {
        if (n < first_level)
            throw InvalidArgument(name + ": level " + std::to_string(n) + " is below the first level " +
                                  std::to_string(first_level));
        return span_gen(n);
    }
};

/// Relative gap below which eigenvalues are counted as one with multiplicity.
inline constexpr double kMultiplicityTolerance = 1e-8;

/// Groups sorted eigenvalues whose consecutive gap is below tol * (1 + |x|).
inline std::vector<Eigenvalue> group_eigenvalues(std::span<const double> sorted, double tol = kMultiplicityTolerance)
{
    std::vector<Eigenvalue> out;
    double sum = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (!out.empty() && std::abs(sorted[i] - sorted[i - 1]) <= tol * (1.0 + std::abs(sorted[i]))) {
            ++out.back().multiplicity;
            sum += sorted[i];
            out.back().value = sum / static_cast<double>(out.back().multiplicity);
        }
        else {
            out.push_back({sorted[i], 1});
            sum = sorted[i];
        }
    }
    return out;
}

struct CompressionResult
{
    std::size_t n = 0;
    std::vector<double> eigenvalues;
    /// Ambient indices carrying the eigenvectors (sorted).
    std::vector<BasisIndex> support;
    /// Column i holds eigenvector i in ambient coordinates over `support`.
    /// Empty when only eigenvalues were requested.
    Eigen::MatrixXd eigenvectors;
    double gram_condition = 1.0;
    /// ||pi_n (A - lambda_i) x_i|| per eigenpair; empty without eigenvectors.
    std::vector<double> residuals;

    [[nodiscard]] std::size_t dimension() const { return eigenvalues.size(); }
    [[nodiscard]] bool has_eigenvectors() const { return eigenvectors.cols() > 0; }

    /// Coordinate <e_j, x_i>.
    [[nodiscard]] double component(std::size_t i, BasisIndex j) const
    {
        auto it = std::lower_bound(support.begin(), support.end(), j);
        if (it == support.end() || *it != j)
            return 0.0;
        return eigenvectors(it - support.begin(), static_cast<Eigen::Index>(i));
    }

    [[nodiscard]] SparseVector eigenvector(std::size_t i) const
    {
        std::vector<SparseEntry> entries;
        for (std::size_t r = 0; r < support.size(); ++r)
            entries.push_back({support[r], eigenvectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i))});
        return SparseVector(std::move(entries));
    }
};

struct CompressOptions
{
    bool eigenvectors = true;
    double max_condition = 1e8;
};

namespace detail
{

/// Sorted union of the supports of a set of vectors.
inline std::vector<BasisIndex> union_support(std::initializer_list<const std::vector<SparseVector>*> groups)
{
    std::vector<BasisIndex> out;
    for (const auto* g : groups)
        for (const auto& v : *g)
            for (const auto& e : v.entries())
                out.push_back(e.index);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline Eigen::MatrixXd densify(const std::vector<SparseVector>& vectors, const std::vector<BasisIndex>& support)
{
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(support.size()),
                                              static_cast<Eigen::Index>(vectors.size()));
    for (std::size_t c = 0; c < vectors.size(); ++c)
        for (const auto& e : vectors[c].entries()) {
            auto r = std::lower_bound(support.begin(), support.end(), e.index) - support.begin();
            m(r, static_cast<Eigen::Index>(c)) = e.value;
        }
    return m;
}

} // namespace detail

/// Solves the Galerkin eigenproblem <v_i, A v_j> c = lambda <v_i, v_j> c on L_n.
///
/// The Gram matrix is reduced by Cholesky, and the resulting basis is passed
/// through a second Cholesky-QR sweep so that the trial basis is orthonormal
/// to working precision. Eigenvectors are returned in ambient coordinates.
template <LinearOperator Op>
CompressionResult compress(const Op& op, const GalerkinSequence& seq, std::size_t n, const CompressOptions& options = {})
{
    const auto span = seq.span(n);
    if (span.empty())
        throw InvalidArgument(seq.name + ": empty trial space at level " + std::to_string(n));
    std::vector<SparseVector> images;
    images.reserve(span.size());
    for (const auto& v : span)
        images.push_back(op.apply(v));

    CompressionResult result;
    result.n = n;
    result.support = detail::union_support({&span, &images});
    const Eigen::MatrixXd basis = detail::densify(span, result.support);
    const Eigen::MatrixXd image = detail::densify(images, result.support);

    const Eigen::MatrixXd gram = basis.transpose() * basis;
    Eigen::LLT<Eigen::MatrixXd> chol(gram);
    if (chol.info() != Eigen::Success)
        throw ConditioningError(seq.name + ": Gram matrix at level " + std::to_string(n) + " is not positive definite");
    const double rcond = chol.rcond();
    result.gram_condition = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (result.gram_condition > options.max_condition)
        throw ConditioningError(seq.name + ": Gram condition " + std::to_string(result.gram_condition) +
                                " at level " + std::to_string(n) + " exceeds the limit");

    // first pass: Q0 = V U^-1 with S = U^T U
    Eigen::MatrixXd q = chol.matrixU().transpose().solve(basis.transpose()).transpose();
    Eigen::MatrixXd aq = chol.matrixU().transpose().solve(image.transpose()).transpose();
    // second pass
    Eigen::LLT<Eigen::MatrixXd> chol2(q.transpose() * q);
    if (chol2.info() != Eigen::Success)
        throw ConditioningError(seq.name + ": re-orthogonalisation failed at level " + std::to_string(n));
    q = chol2.matrixU().transpose().solve(q.transpose()).transpose();
    aq = chol2.matrixU().transpose().solve(aq.transpose()).transpose();

    Eigen::MatrixXd h = q.transpose() * aq;
    h = 0.5 * (h + h.transpose()).eval();

    if (!options.eigenvectors) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
        result.eigenvalues.assign(eig.eigenvalues().data(), eig.eigenvalues().data() + eig.eigenvalues().size());
        return result;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    result.eigenvalues.assign(eig.eigenvalues().data(), eig.eigenvalues().data() + eig.eigenvalues().size());
    const Eigen::MatrixXd& y = eig.eigenvectors();
    result.eigenvectors = q * y;
    const Eigen::MatrixXd projected = h * y - y * eig.eigenvalues().asDiagonal();
    result.residuals.resize(result.eigenvalues.size());
    for (Eigen::Index i = 0; i < projected.cols(); ++i)
        result.residuals[static_cast<std::size_t>(i)] = projected.col(i).norm();
    return result;
}

/// Graph-norm distances from probe basis vectors to the trial spaces.
struct RegularityTable
{
    std::vector<BasisIndex> probes;
    std::vector<std::size_t> levels;
    /// distance[p][l] for probe p and level levels[l].
    std::vector<std::vector<double>> distance;
};

/// For each probe e_j and level n, min over g in L_n of
/// sqrt(||g - e_j||^2 + ||A(g - e_j)||^2), by least squares on the stacked system.
template <LinearOperator Op>
RegularityTable regularity_probe(const Op& op, const GalerkinSequence& seq, std::span<const BasisIndex> probes,
                                 std::size_t n_max)
{
    RegularityTable table;
    table.probes.assign(probes.begin(), probes.end());
    for (std::size_t n = seq.first_level; n <= n_max; ++n)
        table.levels.push_back(n);
    table.distance.assign(probes.size(), std::vector<double>(table.levels.size(), 0.0));

    for (std::size_t l = 0; l < table.levels.size(); ++l) {
        const auto span = seq.span(table.levels[l]);
        std::vector<SparseVector> images;
        for (const auto& v : span)
            images.push_back(op.apply(v));
        for (std::size_t p = 0; p < probes.size(); ++p) {
            const std::vector<SparseVector> target{SparseVector::unit(probes[p])};
            const std::vector<SparseVector> target_image{op.apply(target.front())};
            const auto support = detail::union_support({&span, &images, &target, &target_image});
            const auto rows = static_cast<Eigen::Index>(support.size());
            Eigen::MatrixXd stacked(2 * rows, static_cast<Eigen::Index>(span.size()));
            stacked.topRows(rows) = detail::densify(span, support);
            stacked.bottomRows(rows) = detail::densify(images, support);
            Eigen::VectorXd rhs(2 * rows);
            rhs.head(rows) = detail::densify(target, support).col(0);
            rhs.tail(rows) = detail::densify(target_image, support).col(0);
            Eigen::VectorXd coeffs = stacked.colPivHouseholderQr().solve(rhs);
            table.distance[p][l] = (stacked * coeffs - rhs).norm();
        }
    }
    return table;
}

/// Sequence spanned by f(A) applied to the original spanning vectors.
inline GalerkinSequence transform_sequence(const GalerkinSequence& seq, const BlockOperator& op, FunctionTag f, double a)
{
    GalerkinSequence out;
    out.name = f.name() + "(" + op.name() + ")" + seq.name;
    out.regularity = RegularityClass::unknown;
    out.first_level = seq.first_level;
    out.span_gen = [seq, op, f, a](std::size_t n) {
        auto vectors = seq.span(n);
        for (auto& v : vectors)
            v = op.apply_function(f, a, v);
        return vectors;
    };
    return out;
}

} // namespace specpoll
