#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "sparse_vector.hpp"
#include "spectral_truth.hpp"

namespace specpoll
{

/// Dense real symmetric block acting on a handful of ambient basis vectors.
struct SymBlock
{
    using Eigensystem = std::pair<Eigen::VectorXd, Eigen::MatrixXd>;

    SymBlock() = default;
    SymBlock(std::vector<BasisIndex> idx, Eigen::MatrixXd m, std::optional<Eigensystem> eig = std::nullopt)
        : indices(std::move(idx)), matrix(std::move(m)), eigensystem(std::move(eig))
    {
    }

    std::vector<BasisIndex> indices;
    Eigen::MatrixXd matrix;
    /// Closed-form eigenpairs (ascending values, orthonormal columns), used
    /// instead of a numerical solve. A solver only resolves eigenvector
    /// components to absolute precision, which is not enough for the small
    /// components of nearly aligned blocks.
    std::optional<Eigensystem> eigensystem;

    [[nodiscard]] std::size_t dimension() const { return indices.size(); }
};

/// Scalar function applied through the per-block spectral decomposition.
struct FunctionTag
{
    enum class Kind
    {
        resolvent,      // (x - a)^-1
        sqrt_shift,     // (x - a)^1/2
        inv_sqrt_shift, // (x - a)^-1/2
        neg_power,      // (x - a)^-exponent
    };

    Kind kind = Kind::resolvent;
    double exponent = 0.0;

    static FunctionTag resolvent() { return {Kind::resolvent, 1.0}; }
    static FunctionTag sqrt_shift() { return {Kind::sqrt_shift, -0.5}; }
    static FunctionTag inv_sqrt_shift() { return {Kind::inv_sqrt_shift, 0.5}; }
    static FunctionTag neg_power(double alpha) { return {Kind::neg_power, alpha}; }

    /// Every tag except the resolvent needs a semi-bounded operator and a < lower bound.
    [[nodiscard]] bool requires_semibounded() const { return kind != Kind::resolvent; }

    [[nodiscard]] double operator()(double x, double a) const
    {
        const double d = x - a;
        switch (kind) {
        case Kind::resolvent:
            return 1.0 / d;
        case Kind::sqrt_shift:
            return std::sqrt(d);
        case Kind::inv_sqrt_shift:
            return 1.0 / std::sqrt(d);
        case Kind::neg_power:
            return exponent == 0.0 ? 1.0 : std::pow(d, -exponent);
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    [[nodiscard]] std::string name() const
    {
        switch (kind) {
        case Kind::resolvent:
            return "resolvent";
        case Kind::sqrt_shift:
            return "sqrt_shift";
        case Kind::inv_sqrt_shift:
            return "inv_sqrt_shift";
        case Kind::neg_power: {
            std::ostringstream os;
            os << "neg_power(" << exponent << ")";
            return os.str();
        }
        }
        return "unknown";
    }
};

/// Self-adjoint operator that is block diagonal in the ambient basis.
///
/// Blocks are produced by a pure generator `k -> SymBlock` and cached together
/// with their eigendecomposition. Copies share the cache; the object is
/// immutable from the outside and safe to use from several threads.
class BlockOperator
{
  public:
    using BlockGenerator = std::function<SymBlock(std::size_t)>;
    using BlockLocator = std::function<std::optional<std::size_t>(BasisIndex)>;

    struct BlockData
    {
        SymBlock block;
        Eigen::VectorXd eigenvalues;
        Eigen::MatrixXd eigenvectors;
        double norm = 0.0;

        [[nodiscard]] std::size_t local(BasisIndex i) const
        {
            const auto& idx = block.indices;
            return static_cast<std::size_t>(std::find(idx.begin(), idx.end(), i) - idx.begin());
        }
    };

    /// `lower_bound` unset marks the operator as indefinite.
    BlockOperator(std::string name, BlockGenerator generator, BlockLocator locator, std::optional<double> lower_bound,
                  std::optional<SpectralTruth> truth, std::size_t first_block = 0)
        : impl_(std::make_shared<Impl>())
    {
        impl_->name = std::move(name);
        impl_->generator = std::move(generator);
        impl_->locator = std::move(locator);
        impl_->lower_bound = lower_bound;
        impl_->truth = std::move(truth);
        impl_->first_block = first_block;
    }

    [[nodiscard]] const std::string& name() const { return impl_->name; }
    [[nodiscard]] bool semi_bounded() const { return impl_->lower_bound.has_value(); }
    [[nodiscard]] std::optional<double> lower_bound() const { return impl_->lower_bound; }
    [[nodiscard]] const std::optional<SpectralTruth>& truth() const { return impl_->truth; }
    [[nodiscard]] std::size_t first_block() const { return impl_->first_block; }

    [[nodiscard]] std::optional<std::size_t> locate(BasisIndex i) const { return impl_->locator(i); }

    [[nodiscard]] std::size_t block_of(BasisIndex i) const
    {
        auto k = impl_->locator(i);
        if (!k)
            throw StructuralError(impl_->name + ": basis index " + std::to_string(i.id) +
                                  " is outside every generated block");
        return *k;
    }

    [[nodiscard]] const BlockData& block(std::size_t k) const
    {
        {
            std::shared_lock lock(impl_->mutex);
            if (auto it = impl_->cache.find(k); it != impl_->cache.end())
                return *it->second;
        }
        auto data = std::make_shared<const BlockData>(build(k));
        std::unique_lock lock(impl_->mutex);
        auto [it, inserted] = impl_->cache.emplace(k, std::move(data));
        return *it->second;
    }

    [[nodiscard]] SparseVector apply(const SparseVector& v) const
    {
        return blockwise(v, [](const BlockData& b, const Eigen::VectorXd& x) -> Eigen::VectorXd {
            return b.block.matrix * x;
        });
    }

    [[nodiscard]] SparseVector apply_function(FunctionTag f, double a, const SparseVector& v) const
    {
        return blockwise(v, [&](const BlockData& b, const Eigen::VectorXd& x) -> Eigen::VectorXd {
            check_shift(b, f, a);
            Eigen::VectorXd coeffs = b.eigenvectors.transpose() * x;
            for (Eigen::Index i = 0; i < coeffs.size(); ++i)
                coeffs(i) *= f(b.eigenvalues(i), a);
            return b.eigenvectors * coeffs;
        });
    }

    /// Dense matrix of f(block k) in the block's local coordinates.
    [[nodiscard]] Eigen::MatrixXd function_block(std::size_t k, FunctionTag f, double a) const
    {
        const auto& b = block(k);
        check_shift(b, f, a);
        Eigen::VectorXd values(b.eigenvalues.size());
        for (Eigen::Index i = 0; i < values.size(); ++i)
            values(i) = f(b.eigenvalues(i), a);
        Eigen::MatrixXd m = b.eigenvectors * values.asDiagonal() * b.eigenvectors.transpose();
        // keep it exactly symmetric
        m.triangularView<Eigen::StrictlyLower>() = m.transpose().triangularView<Eigen::StrictlyLower>();
        return m;
    }

    /// The `count` smallest ambient indices, assuming blocks are generated in
    /// increasing index order.
    [[nodiscard]] std::vector<BasisIndex> leading_indices(std::size_t count) const
    {
        std::vector<BasisIndex> out;
        for (std::size_t k = impl_->first_block; out.size() < count; ++k) {
            const auto& idx = block(k).block.indices;
            out.insert(out.end(), idx.begin(), idx.end());
        }
        std::sort(out.begin(), out.end());
        out.resize(count);
        return out;
    }

  private:
    struct Impl
    {
        std::string name;
        BlockGenerator generator;
        BlockLocator locator;
        std::optional<double> lower_bound;
        std::optional<SpectralTruth> truth;
        std::size_t first_block = 0;
        mutable std::shared_mutex mutex;
        mutable std::unordered_map<std::size_t, std::shared_ptr<const BlockData>> cache;
    };

    [[nodiscard]] BlockData build(std::size_t k) const
    {
        BlockData data;
        data.block = impl_->generator(k);
        const auto& m = data.block.matrix;
        const auto d = static_cast<Eigen::Index>(data.block.indices.size());
        const std::string where = impl_->name + " block " + std::to_string(k);
        if (d == 0 || m.rows() != d || m.cols() != d)
            throw StructuralError(where + ": matrix size does not match its index list");
        if (m != m.transpose())
            throw StructuralError(where + ": matrix is not symmetric");
        for (auto i : data.block.indices) {
            auto located = impl_->locator(i);
            if (!located || *located != k)
                throw StructuralError(where + ": index " + std::to_string(i.id) + " is located in another block");
        }
        if (data.block.eigensystem) {
            const auto& [values, vectors] = *data.block.eigensystem;
            if (values.size() != d || vectors.rows() != d || vectors.cols() != d)
                throw StructuralError(where + ": eigensystem size does not match the block");
            const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
            if (!std::is_sorted(values.data(), values.data() + d) ||
                !(vectors.transpose() * vectors).isIdentity(1e-12) ||
                (m * vectors - vectors * values.asDiagonal()).cwiseAbs().maxCoeff() > 1e-12 * scale)
                throw StructuralError(where + ": eigensystem does not diagonalise the block");
            data.eigenvalues = values;
            data.eigenvectors = vectors;
        }
        else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
            data.eigenvalues = eig.eigenvalues();
            data.eigenvectors = eig.eigenvectors();
        }
        data.norm = data.eigenvalues.cwiseAbs().maxCoeff();
        if (impl_->lower_bound && data.eigenvalues(0) < *impl_->lower_bound - 1e-12 * std::max(1.0, data.norm))
            throw StructuralError(where + ": eigenvalue below the declared lower bound");
        return data;
    }

    void check_shift(const BlockData& b, FunctionTag f, double a) const
    {
        if (f.requires_semibounded()) {
            if (!impl_->lower_bound)
                throw DomainError(impl_->name + ": " + f.name() + " needs a semi-bounded operator");
            if (!(a < *impl_->lower_bound))
                throw DomainError(impl_->name + ": shift a must lie below the lower bound for " + f.name());
            if (!(b.eigenvalues(0) > a))
                throw DomainError(impl_->name + ": shift violates " + f.name() + " on block with index " +
                                  std::to_string(b.block.indices.front().id));
        }
        else {
            const double tiny = 1e-14 * std::max(1.0, b.norm);
            for (Eigen::Index i = 0; i < b.eigenvalues.size(); ++i)
                if (std::abs(b.eigenvalues(i) - a) <= tiny)
                    throw DomainError(impl_->name + ": shift is an eigenvalue of block with index " +
                                      std::to_string(b.block.indices.front().id));
        }
    }

    template <class Kernel>
    [[nodiscard]] SparseVector blockwise(const SparseVector& v, Kernel&& kernel) const
    {
        std::map<std::size_t, std::vector<SparseEntry>> grouped;
        for (const auto& e : v.entries())
            grouped[block_of(e.index)].push_back(e);
        std::vector<SparseEntry> out;
        for (const auto& [k, entries] : grouped) {
            const auto& b = block(k);
            Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(b.block.dimension()));
            for (const auto& e : entries)
                x(static_cast<Eigen::Index>(b.local(e.index))) = e.value;
            Eigen::VectorXd y = kernel(b, x);
            for (std::size_t i = 0; i < b.block.dimension(); ++i)
                out.push_back({b.block.indices[i], y(static_cast<Eigen::Index>(i))});
        }
        return SparseVector(std::move(out));
    }

    std::shared_ptr<Impl> impl_;
};

inline SparseVector apply(const BlockOperator& op, const SparseVector& v) { return op.apply(v); }

inline SparseVector apply_function(const BlockOperator& op, FunctionTag f, double a, const SparseVector& v)
{
    return op.apply_function(f, a, v);
}

/// Declared spectrum inside (lo, hi); empty when the truth is unknown.
inline std::vector<SpectralPoint> truth_spectrum_in(const BlockOperator& op, double lo, double hi)
{
    if (!op.truth())
        return {};
    return op.truth()->in(lo, hi);
}

namespace detail
{

/// Spectral truth of (A - a)^-1 given the truth of A. Eigenvalues of the
/// resolvent closer than `cutoff` to 0 (the image of infinity) are not listed.
inline SpectralTruth resolvent_truth(const SpectralTruth& base, double a, double cutoff = 1e-4)
{
    std::vector<double> ess;
    for (double e : base.essential())
        if (e != a)
            ess.push_back(1.0 / (e - a));
    if (base.unbounded_above() || base.unbounded_below())
        ess.push_back(0.0);
    auto enumerate = [base, a, cutoff](double lo, double hi) {
        std::vector<Eigenvalue> out;
        auto pull_back = [&](double x_lo, double x_hi) {
            // x = 1/(lambda - a) is decreasing on each side of a
            x_lo = std::max(x_lo, cutoff);
            if (!(x_lo < x_hi))
                return;
            for (const auto& e : base.discrete_in(a + 1.0 / x_hi, a + 1.0 / x_lo))
                out.push_back({1.0 / (e.value - a), e.multiplicity});
        };
        if (hi > 0.0)
            pull_back(std::max(lo, 0.0), hi);
        if (lo < 0.0) {
            // mirror the negative half onto the positive axis
            double n_lo = std::max(-hi, 0.0);
            double n_hi = -lo;
            n_lo = std::max(n_lo, cutoff);
            if (n_lo < n_hi)
                for (const auto& e : base.discrete_in(a - 1.0 / n_lo, a - 1.0 / n_hi))
                    out.push_back({1.0 / (e.value - a), e.multiplicity});
        }
        return out;
    };
    return SpectralTruth(std::move(ess), enumerate, false, false);
}

} // namespace detail

/// Block operator f(A) for a function tag and shift. The truth is carried over
/// for the resolvent only.
inline BlockOperator function_operator(const BlockOperator& op, FunctionTag f, double a)
{
    std::optional<SpectralTruth> truth;
    if (f.kind == FunctionTag::Kind::resolvent && op.truth())
        truth = detail::resolvent_truth(*op.truth(), a);
    std::optional<double> lower;
    if (f.requires_semibounded() || (op.semi_bounded() && a < *op.lower_bound()))
        lower = 0.0;
    auto gen = [op, f, a](std::size_t k) {
        const auto& b = op.block(k);
        SymBlock out{b.block.indices, op.function_block(k, f, a), std::nullopt};
        if (b.block.eigensystem) {
            // carry the closed-form eigenvectors over, reordered by f(lambda)
            const auto d = b.eigenvalues.size();
            std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
            std::iota(order.begin(), order.end(), 0);
            std::vector<double> fv(order.size());
            for (Eigen::Index i = 0; i < d; ++i)
                fv[static_cast<std::size_t>(i)] = f(b.eigenvalues(i), a);
            std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) {
                return fv[static_cast<std::size_t>(x)] < fv[static_cast<std::size_t>(y)];
            });
            Eigen::VectorXd values(d);
            Eigen::MatrixXd vectors(d, d);
            for (Eigen::Index i = 0; i < d; ++i) {
                values(i) = fv[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
                vectors.col(i) = b.eigenvectors.col(order[static_cast<std::size_t>(i)]);
            }
            out.eigensystem.emplace(std::move(values), std::move(vectors));
        }
        return out;
    };
    auto loc = [op](BasisIndex i) { return op.locate(i); };
    return BlockOperator(op.name() + "|" + f.name(), gen, loc, lower, std::move(truth), op.first_block());
}

/// A + mu |e_j><e_j|. The truth is updated block-locally: discrete eigenvalues
/// of the touched block are replaced by the eigenvalues of the new block.
inline BlockOperator with_rank_one(const BlockOperator& op, BasisIndex j, double mu)
{
    const std::size_t target = op.block_of(j);
    const auto& base = op.block(target);
    SymBlock changed = base.block;
    const auto pos = static_cast<Eigen::Index>(base.local(j));
    changed.matrix(pos, pos) += mu;
    changed.eigensystem.reset();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(changed.matrix, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd new_values = eig.eigenvalues();

    std::optional<SpectralTruth> truth;
    if (op.truth()) {
        const SpectralTruth old = *op.truth();
        const double tol = 1e-9 * std::max(1.0, base.norm);
        std::vector<double> removed;
        for (Eigen::Index i = 0; i < base.eigenvalues.size(); ++i)
            if (!old.is_essential(base.eigenvalues(i), tol))
                removed.push_back(base.eigenvalues(i));
        std::vector<double> added;
        for (Eigen::Index i = 0; i < new_values.size(); ++i)
            if (!old.is_essential(new_values(i), 1e-12))
                added.push_back(new_values(i));
        auto enumerate = [old, removed, added, tol](double lo, double hi) {
            std::vector<Eigenvalue> values = old.discrete_in(lo, hi);
            for (double r : removed) {
                auto it = std::find_if(values.begin(), values.end(),
                                       [&](const Eigenvalue& e) { return std::abs(e.value - r) <= tol; });
                if (it != values.end() && --it->multiplicity == 0)
                    values.erase(it);
            }
            for (double v : added)
                if (v > lo && v < hi)
                    values.push_back({v, 1});
            return values;
        };
        truth = SpectralTruth(old.essential(), enumerate, old.unbounded_above(), old.unbounded_below());
    }
    std::optional<double> lower = op.lower_bound();
    if (lower)
        lower = std::min(*lower, new_values(0));
    auto gen = [op, target, changed](std::size_t k) { return k == target ? changed : op.block(k).block; };
    auto loc = [op](BasisIndex i) { return op.locate(i); };
    std::ostringstream name;
    name << op.name() << "+" << mu << "|e" << j.id << "><e" << j.id << "|";
    return BlockOperator(name.str(), gen, loc, lower, std::move(truth), op.first_block());
}

} // namespace specpoll
