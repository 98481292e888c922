#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "block_operator.hpp"
#include "catalog.hpp"
#include "errors.hpp"
#include "galerkin.hpp"
#include "limitspec.hpp"
#include "parallel.hpp"

namespace specpoll
{

/// Finite-n comparison of sigma(A_n) with the compression of (A - a)^-1 to
/// G_n = (A - a)^1/2 L_n.
struct MappingCheck
{
    double a = 0.0;
    std::size_t n = 0;
    /// (lambda, (lambda - a)^-1) for every eigenvalue of A_n.
    std::vector<std::pair<double, double>> forward;
    /// Sorted spectrum of the resolvent compression.
    std::vector<double> resolvent_spectrum;
    double max_mismatch = 0.0;
    double tolerance = 0.0;
    double gram_condition = 1.0;

    [[nodiscard]] bool passed() const { return max_mismatch <= tolerance; }
};

namespace detail
{

inline void require_shift_below(const BlockOperator& op, double a)
{
    if (!op.semi_bounded())
        throw DomainError(op.name() + ": mapping check needs a semi-bounded operator");
    if (!(a < *op.lower_bound()))
        throw DomainError(op.name() + ": shift a must lie below the lower bound");
}

} // namespace detail

/// Runs both compressions at level n and measures how far the images of
/// sigma(A_n) are from the resolvent-side spectrum.
inline MappingCheck check_mapping_at_n(const BlockOperator& op, const GalerkinSequence& seq, double a, std::size_t n,
                                       double max_condition = 1e8)
{
    detail::require_shift_below(op, a);
    CompressOptions copts{false, max_condition};
    const auto direct = compress(op, seq, n, copts);
    const auto g = transform_sequence(seq, op, FunctionTag::sqrt_shift(), a);
    const auto resolvent = function_operator(op, FunctionTag::resolvent(), a);
    const auto inverse = compress(resolvent, g, n, copts);

    MappingCheck check;
    check.a = a;
    check.n = n;
    check.gram_condition = inverse.gram_condition;
    check.resolvent_spectrum = inverse.eigenvalues;
    std::vector<double> images;
    double scale = 0.0;
    for (double lambda : direct.eigenvalues) {
        const double y = 1.0 / (lambda - a);
        check.forward.emplace_back(lambda, y);
        images.push_back(y);
        scale = std::max(scale, std::abs(y));
    }
    check.tolerance = 1e-9 * (1.0 + scale);
    // x -> 1/(x - a) reverses the order: compare sorted images with the sorted resolvent spectrum
    std::sort(images.begin(), images.end());
    if (images.size() != check.resolvent_spectrum.size()) {
        check.max_mismatch = std::numeric_limits<double>::infinity();
        return check;
    }
    double elementwise = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i)
        elementwise = std::max(elementwise, std::abs(images[i] - check.resolvent_spectrum[i]));
    check.max_mismatch = std::max(hausdorff(images, check.resolvent_spectrum), elementwise);
    return check;
}

/// Default shifts: lower_bound - 1 and lower_bound - 3.
inline std::vector<double> default_shifts(const BlockOperator& op)
{
    detail::require_shift_below(op, *op.lower_bound() - 1.0);
    const double a = *op.lower_bound() - 1.0;
    return {a, a - 2.0};
}

/// check_mapping_at_n over every (shift, level) pair, in parallel.
inline std::vector<MappingCheck> check_mapping_sweep(const BlockOperator& op, const GalerkinSequence& seq,
                                                     std::span<const double> shifts, std::span<const std::size_t> levels,
                                                     double max_condition = 1e8)
{
    return parallel_map(shifts.size() * levels.size(), [&](std::size_t i) {
        return check_mapping_at_n(op, seq, shifts[i / levels.size()], levels[i % levels.size()], max_condition);
    });
}

struct LimitMappingReport
{
    double a = 0.0;
    LimitSetEstimate direct;
    LimitSetEstimate inverse;
    /// (x - a)^-1 for every A-side cluster center, in A-side order.
    std::vector<double> mapped_centers;
    /// Hausdorff distance between mapped A-side centers and resolvent-side centers.
    double center_mismatch = std::numeric_limits<double>::infinity();
    double tolerance = 0.0;
    /// Each mapped cluster carries the same essential/discrete character on both sides.
    bool labels_agree = false;
    /// Smallest |mu| of the resolvent compression per schedule point.
    std::vector<double> min_abs_resolvent;
    /// Resolvent side accumulates at 0 (the image of infinity).
    bool zero_cluster = false;
    bool expect_zero_cluster = false;

    [[nodiscard]] bool passed() const
    {
        return center_mismatch <= tolerance && labels_agree && zero_cluster == expect_zero_cluster;
    }
};

namespace detail
{

inline bool essential_like(ClusterLabel l) { return l == ClusterLabel::essential || l == ClusterLabel::pollution; }

} // namespace detail

/// Compares limit sets on both sides of x -> (x - a)^-1 inside `window`.
inline LimitMappingReport check_limit_mapping(const BlockOperator& op, const GalerkinSequence& seq, double a,
                                              std::pair<double, double> window, std::span<const std::size_t> n_schedule,
                                              const LimitSetOptions& options = {},
                                              const ClassifyConfig& classify = {})
{
    detail::require_shift_below(op, a);
    auto [lo, hi] = window;
    lo = std::max(lo, a + 1e-12);
    if (!(lo < hi))
        throw InvalidArgument("check_limit_mapping: window lies below the shift");
    LimitMappingReport report;
    report.a = a;
    report.direct = estimate_limit_set(op, seq, {lo, hi}, n_schedule, options);
    classify_all(report.direct, op.truth(), classify);

    const auto g = transform_sequence(seq, op, FunctionTag::sqrt_shift(), a);
    const auto resolvent = function_operator(op, FunctionTag::resolvent(), a);
    const double r_lo = std::isfinite(hi) ? 1.0 / (hi - a) : 0.0;
    const double r_hi = 1.0 / (lo - a);
    report.inverse = estimate_limit_set(resolvent, g, {r_lo, r_hi}, n_schedule, options);
    classify_all(report.inverse, resolvent.truth(), classify);

    for (double c : report.direct.centers())
        report.mapped_centers.push_back(1.0 / (c - a));
    const auto inverse_centers = report.inverse.centers();
    report.tolerance = options.tol * (1.0 + std::max(std::abs(r_lo), std::abs(r_hi)));
    if (report.mapped_centers.empty() && inverse_centers.empty())
        report.center_mismatch = 0.0;
    else if (!report.mapped_centers.empty() && !inverse_centers.empty())
        report.center_mismatch = hausdorff(report.mapped_centers, inverse_centers);

    report.labels_agree = true;
    for (std::size_t i = 0; i < report.direct.clusters.size(); ++i) {
        const auto* match = report.inverse.nearest(report.mapped_centers[i]);
        if (!match || std::abs(match->center - report.mapped_centers[i]) > report.tolerance ||
            detail::essential_like(match->label) != detail::essential_like(report.direct.clusters[i].label) ||
            match->label == ClusterLabel::undetermined)
            report.labels_agree = false;
    }

    for (const auto& level : report.inverse.levels) {
        double m = std::numeric_limits<double>::infinity();
        for (double x : level.all_values)
            m = std::min(m, std::abs(x));
        report.min_abs_resolvent.push_back(m);
    }
    const auto& mins = report.min_abs_resolvent;
    report.zero_cluster = mins.back() < options.tol && std::is_sorted(mins.rbegin(), mins.rend());
    report.expect_zero_cluster = op.truth() && op.truth()->unbounded_above();
    return report;
}

/// Indefinite counterexample: lambda is a limit point on the A side while the
/// compressions of A^-1 to G = L stay at distance >= 1/lambda - 1 from 1/lambda.
struct MappingFailureReport
{
    double lambda = 0.0;
    std::vector<std::size_t> levels;
    /// Eigenvalue of A_n closest to lambda.
    std::vector<double> direct_value;
    std::vector<double> direct_error;
    /// lambda^3 / (6 n^2).
    std::vector<double> taylor_bound;
    /// Distance from 1/lambda to the spectrum of the compression of A^-1.
    std::vector<double> inverse_distance;
    /// Largest |mu| of the compression of A^-1.
    std::vector<double> inverse_radius;
    double margin = 0.0;

    [[nodiscard]] bool direct_converges() const
    {
        for (std::size_t i = 0; i < levels.size(); ++i)
            if (direct_error[i] > taylor_bound[i] * (1.0 + 1e-6) + 1e-13)
                return false;
        return true;
    }

    [[nodiscard]] bool inverse_excludes() const
    {
        for (std::size_t i = 0; i < levels.size(); ++i)
            if (levels[i] >= 2 && inverse_distance[i] < margin)
                return false;
        return true;
    }

    /// The spectral mapping that holds for semi-bounded operators fails at every level.
    [[nodiscard]] bool contradiction() const { return direct_converges() && inverse_excludes(); }
};

inline MappingFailureReport demonstrate_mapping_failure_indefinite(double lambda, std::span<const std::size_t> levels)
{
    if (!(lambda > 0.0 && lambda < 1.0))
        throw InvalidArgument("mapping failure demo: lambda must lie in (0, 1)");
    const auto ex = catalog::get_example("mapping_impossible", {{"lambda", lambda}});
    const auto inverse = function_operator(*ex.op, FunctionTag::resolvent(), 0.0);
    MappingFailureReport report;
    report.lambda = lambda;
    report.levels.assign(levels.begin(), levels.end());
    report.margin = 1.0 / lambda - 1.0;
    struct Row
    {
        double value, distance, radius;
    };
    const auto rows = parallel_map(levels.size(), [&](std::size_t i) {
        const auto direct = compress(*ex.op, ex.sequence, levels[i], {false});
        const auto inv = compress(inverse, ex.sequence, levels[i], {false});
        Row row{};
        row.value = *std::min_element(direct.eigenvalues.begin(), direct.eigenvalues.end(),
                                      [&](double x, double y) { return std::abs(x - lambda) < std::abs(y - lambda); });
        row.distance = std::numeric_limits<double>::infinity();
        row.radius = 0.0;
        for (double mu : inv.eigenvalues) {
            row.distance = std::min(row.distance, std::abs(mu - 1.0 / lambda));
            row.radius = std::max(row.radius, std::abs(mu));
        }
        return row;
    });
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const double n = static_cast<double>(levels[i]);
        report.direct_value.push_back(rows[i].value);
        report.direct_error.push_back(std::abs(rows[i].value - lambda));
        report.taylor_bound.push_back(lambda * lambda * lambda / (6.0 * n * n));
        report.inverse_distance.push_back(rows[i].distance);
        report.inverse_radius.push_back(rows[i].radius);
    }
    return report;
}

} // namespace specpoll
