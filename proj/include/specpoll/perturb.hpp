#pragma once

// Numerical probes for relative compactness of A - B and comparison of the
// limiting essential spectra of A and B on a shared trial sequence.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
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

enum class ProbeFamily
{
    /// (A - a)^1/2 (B - a)^-1/2 - I
    K_theorem,
    /// (A - a)^-alpha (A - B) (B - a)^-beta
    L_corollary,
};

enum class DecayVerdict
{
    decaying,
    non_decaying,
    inconclusive,
};

inline const char* to_string(ProbeFamily f) { return f == ProbeFamily::K_theorem ? "K_theorem" : "L_corollary"; }

inline const char* to_string(DecayVerdict v)
{
    switch (v) {
    case DecayVerdict::decaying:
        return "decaying";
    case DecayVerdict::non_decaying:
        return "non-decaying";
    case DecayVerdict::inconclusive:
        return "inconclusive";
    }
    return "inconclusive";
}

struct ProbeOptions
{
    /// Fitted log-log slope below this is decay.
    double decay_slope = -0.01;
    /// Fitted slope at or above this is non-decay; in between is inconclusive.
    double flat_slope = -1e-3;
    /// Norms at or below this count as exact zeros.
    double zero_floor = 1e-12;
    /// Slope of the blockwise condition number below this counts as bounded.
    double condition_slope = 0.05;
};

struct CompactnessProbe
{
    ProbeFamily family = ProbeFamily::L_corollary;
    double a = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    /// Block numbers k and the spectral norm of the probed operator on block k.
    std::vector<std::size_t> blocks;
    std::vector<double> block_norms;
    DecayVerdict verdict = DecayVerdict::inconclusive;
    /// Least-squares slope of log norm against log k over the last decade;
    /// -inf when the tail vanishes identically.
    double fit = 0.0;
    double tail_max = 0.0;
    /// Blockwise condition number of (A - a)^1/2 (B - a)^-1/2 stays bounded.
    bool domain_condition = false;
    double condition_fit = 0.0;
};

namespace detail
{

/// Least-squares slope of log y against log x.
inline double loglog_slope(std::span<const double> x, std::span<const double> y)
{
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double den = n * sxx - sx * sx;
    return den > 0.0 ? (n * sxy - sx * sy) / den : 0.0;
}

inline double spectral_norm(const Eigen::MatrixXd& m) { return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0); }

inline void require_aligned(const BlockOperator& A, const BlockOperator& B, std::size_t k)
{
    if (A.block(k).block.indices != B.block(k).block.indices)
        throw StructuralError("probe: blocks " + std::to_string(k) + " of " + A.name() + " and " + B.name() +
                              " act on different indices");
}

/// (A - a)^1/2 (B - a)^-1/2 on block k.
inline Eigen::MatrixXd root_quotient(const BlockOperator& A, const BlockOperator& B, double a, std::size_t k)
{
    require_aligned(A, B, k);
    return A.function_block(k, FunctionTag::sqrt_shift(), a) * B.function_block(k, FunctionTag::inv_sqrt_shift(), a);
}

/// (X - a)^p on one block, from its eigenpairs.
inline Eigen::MatrixXd shifted_power(const BlockOperator::BlockData& b, double p, double a)
{
    Eigen::VectorXd values(b.eigenvalues.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (!(b.eigenvalues(i) > a))
            throw DomainError("probe: shift is not below the spectrum of a block");
        values(i) = std::pow(b.eigenvalues(i) - a, p);
    }
    return b.eigenvectors * values.asDiagonal() * b.eigenvectors.transpose();
}

} // namespace detail

/// Block k of the probed operator, in the block's local coordinates.
inline Eigen::MatrixXd probe_block(const BlockOperator& A, const BlockOperator& B, ProbeFamily family, double a,
                                   double alpha, double beta, std::size_t k)
{
    detail::require_aligned(A, B, k);
    if (family == ProbeFamily::K_theorem) {
        Eigen::MatrixXd root = detail::root_quotient(A, B, a, k);
        return root - Eigen::MatrixXd::Identity(root.rows(), root.cols());
    }
    const auto& ab = A.block(k);
    const auto& bb = B.block(k);
    if (ab.block.matrix == bb.block.matrix)
        return Eigen::MatrixXd::Zero(ab.block.matrix.rows(), ab.block.matrix.cols());
    // A - B = (A - a) - (B - a): expanding avoids forming A - B, whose large
    // entries cancel against the small off-diagonal part of (A - a)^-alpha.
    return detail::shifted_power(ab, 1.0 - alpha, a) * detail::shifted_power(bb, -beta, a) -
           detail::shifted_power(ab, -alpha, a) * detail::shifted_power(bb, 1.0 - beta, a);
}

/// Blockwise norms of the probed operator for k up to k_max, with a decay verdict.
inline CompactnessProbe probe_compactness(const BlockOperator& A, const BlockOperator& B, ProbeFamily family, double a,
                                          double alpha, double beta, std::size_t k_max,
                                          const ProbeOptions& options = {})
{
    if (!A.semi_bounded() || !B.semi_bounded())
        throw DomainError("probe_compactness: both operators must be semi-bounded");
    if (!(a < *A.lower_bound()) || !(a < *B.lower_bound()))
        throw DomainError("probe_compactness: shift a must lie below both lower bounds");
    if (family == ProbeFamily::L_corollary && (alpha < 0.0 || beta < 0.0))
        throw InvalidArgument("probe_compactness: exponents must be non-negative");
    const std::size_t first = std::max(A.first_block(), B.first_block());
    if (k_max < first + 10)
        throw InvalidArgument("probe_compactness: k_max too small for a fit over the last decade");

    CompactnessProbe probe;
    probe.family = family;
    probe.a = a;
    probe.alpha = alpha;
    probe.beta = beta;
    std::vector<double> conditions;
    for (std::size_t k = first; k <= k_max; ++k) {
        probe.blocks.push_back(k);
        probe.block_norms.push_back(detail::spectral_norm(probe_block(A, B, family, a, alpha, beta, k)));
        const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(detail::root_quotient(A, B, a, k)).singularValues();
        conditions.push_back(sv(0) / sv(sv.size() - 1));
    }

    const std::size_t tail_from = std::max(first, k_max / 10);
    std::vector<double> xs, ys, cxs, cys;
    bool all_zero = true;
    for (std::size_t i = 0; i < probe.blocks.size(); ++i) {
        if (probe.blocks[i] < tail_from)
            continue;
        const double x = static_cast<double>(probe.blocks[i]);
        probe.tail_max = std::max(probe.tail_max, probe.block_norms[i]);
        cxs.push_back(x);
        cys.push_back(conditions[i]);
        if (probe.block_norms[i] > options.zero_floor) {
            all_zero = false;
            xs.push_back(x);
            ys.push_back(probe.block_norms[i]);
        }
    }
    probe.condition_fit = detail::loglog_slope(cxs, cys);
    probe.domain_condition = probe.condition_fit < options.condition_slope;
    if (all_zero) {
        probe.fit = -std::numeric_limits<double>::infinity();
        probe.verdict = DecayVerdict::decaying;
        return probe;
    }
    probe.fit = xs.size() >= 2 ? detail::loglog_slope(xs, ys) : 0.0;
    if (xs.size() < 2)
        probe.verdict = DecayVerdict::inconclusive;
    else if (probe.fit < options.decay_slope)
        probe.verdict = DecayVerdict::decaying;
    else if (probe.fit >= options.flat_slope)
        probe.verdict = DecayVerdict::non_decaying;
    else
        probe.verdict = DecayVerdict::inconclusive;
    return probe;
}

// ---------------------------------------------------------------------------

enum class Region
{
    corollary_region,
    counterexample_region,
    neither,
};

inline const char* to_string(Region r)
{
    switch (r) {
    case Region::corollary_region:
        return "corollary_region";
    case Region::counterexample_region:
        return "counterexample_region";
    case Region::neither:
        return "neither";
    }
    return "neither";
}

inline bool in_corollary_region(double alpha, double beta)
{
    return alpha >= 0.0 && beta >= 0.0 && alpha < 1.0 && beta < 1.0 && alpha + beta < 1.0;
}

inline bool in_counterexample_region(double ell, double r, double alpha, double beta)
{
    return ell == 2.0 && alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0 && r > 0.0 && r < 2.0 &&
           -beta * r - 2.0 * alpha + 2.0 < 0.0 && alpha > 0.5 && beta > 1.0 - 1.0 / r;
}

/// Which printed parameter region (alpha, beta) falls in. The two regions are disjoint.
inline Region region_check(double ell, double r, double alpha, double beta)
{
    if (!(ell > 0.0) || !(r > 0.0))
        throw InvalidArgument("region_check: ell and r must be positive");
    const bool cor = in_corollary_region(alpha, beta);
    const bool cex = in_counterexample_region(ell, r, alpha, beta);
    if (cor && cex)
        throw Error("region_check: parameter regions overlap");
    if (cor)
        return Region::corollary_region;
    if (cex)
        return Region::counterexample_region;
    return Region::neither;
}

// ---------------------------------------------------------------------------

struct StabilityReport
{
    LimitSetEstimate a_side;
    LimitSetEstimate b_side;
    /// Centers labeled essential or pollution.
    std::vector<double> ess_a;
    std::vector<double> ess_b;
    double distance = 0.0;
    double tolerance = 1e-3;

    [[nodiscard]] bool stable() const { return distance < tolerance; }
};

inline StabilityReport stability_compare(const BlockOperator& A, const BlockOperator& B, const GalerkinSequence& seq,
                                         std::pair<double, double> window, std::span<const std::size_t> n_schedule,
                                         const LimitSetOptions& options = {}, const ClassifyConfig& classify = {},
                                         double tolerance = 1e-3)
{
    StabilityReport report;
    report.tolerance = tolerance;
    report.a_side = estimate_limit_set(A, seq, window, n_schedule, options);
    classify_all(report.a_side, A.truth(), classify);
    report.b_side = estimate_limit_set(B, seq, window, n_schedule, options);
    classify_all(report.b_side, B.truth(), classify);
    report.ess_a = report.a_side.centers_with({ClusterLabel::essential, ClusterLabel::pollution});
    report.ess_b = report.b_side.centers_with({ClusterLabel::essential, ClusterLabel::pollution});
    if (report.ess_a.empty() && report.ess_b.empty())
        report.distance = 0.0;
    else if (report.ess_a.empty() || report.ess_b.empty())
        report.distance = std::numeric_limits<double>::infinity();
    else
        report.distance = hausdorff(report.ess_a, report.ess_b);
    return report;
}

// ---------------------------------------------------------------------------

struct RegionScanOptions
{
    double ell = 2.0;
    double r = 1.5;
    /// Cells per axis; points sit at cell centres (i + 1/2) / grid.
    std::size_t grid = 20;
    std::size_t k_max = 10000;
    double a = 0.0;
    /// Rank-one perturbation used as the compact truth-aligned C in the corollary region.
    double compact_mu = 0.3;
    std::pair<double, double> window{0.5, 3.5};
    std::vector<std::size_t> n_schedule{40, 80, 120, 160, 200, 240};
    ProbeOptions probe;
};

struct RegionCell
{
    double alpha = 0.0;
    double beta = 0.0;
    Region region = Region::neither;
    /// Probe of the optimality pair (A, B).
    DecayVerdict pair_verdict = DecayVerdict::inconclusive;
    double pair_fit = 0.0;
    double pair_tail_max = 0.0;
    /// Probe of (A, A + compact C); set in the corollary region only.
    std::optional<DecayVerdict> compact_verdict;
    /// Expected verdict pattern for the cell's region holds.
    bool consistent = true;
};

struct RegionScan
{
    RegionScanOptions options;
    std::vector<RegionCell> cells;
    StabilityReport pair_stability;
    StabilityReport compact_stability;

    [[nodiscard]] std::size_t count(Region r) const
    {
        return static_cast<std::size_t>(
            std::count_if(cells.begin(), cells.end(), [&](const RegionCell& c) { return c.region == r; }));
    }

    [[nodiscard]] bool dichotomy_holds() const
    {
        return std::all_of(cells.begin(), cells.end(), [](const RegionCell& c) { return c.consistent; });
    }
};

/// Phase diagram over (alpha, beta) for the optimality block family.
///
/// Counterexample cells must show a decaying probe on (A, B) although the
/// limiting essential spectra differ; corollary cells use a compact rank-one C
/// and must show a decaying probe together with equal limiting essential spectra.
inline RegionScan region_scan(const RegionScanOptions& options = {})
{
    if (options.grid == 0)
        throw InvalidArgument("region_scan: grid must be positive");
    RegionScan scan;
    scan.options = options;
    const auto ex = catalog::get_example("optimality_blocks", {{"ell", options.ell}, {"r", options.r}});
    const BlockOperator& A = *ex.op;
    const BlockOperator& B = *ex.partner;
    const BlockOperator compact = with_rank_one(A, catalog::e_plus(1), options.compact_mu);

    scan.pair_stability = stability_compare(A, B, ex.sequence, options.window, options.n_schedule);
    scan.compact_stability = stability_compare(A, compact, ex.sequence, options.window, options.n_schedule);

    const std::size_t g = options.grid;
    scan.cells = parallel_map(g * g, [&](std::size_t i) {
        RegionCell cell;
        cell.alpha = (static_cast<double>(i / g) + 0.5) / static_cast<double>(g);
        cell.beta = (static_cast<double>(i % g) + 0.5) / static_cast<double>(g);
        cell.region = region_check(options.ell, options.r, cell.alpha, cell.beta);
        const auto pair = probe_compactness(A, B, ProbeFamily::L_corollary, options.a, cell.alpha, cell.beta,
                                            options.k_max, options.probe);
        cell.pair_verdict = pair.verdict;
        cell.pair_fit = pair.fit;
        cell.pair_tail_max = pair.tail_max;
        if (cell.region == Region::corollary_region) {
            const auto c = probe_compactness(A, compact, ProbeFamily::L_corollary, options.a, cell.alpha, cell.beta,
                                             options.k_max, options.probe);
            cell.compact_verdict = c.verdict;
            cell.consistent = c.verdict == DecayVerdict::decaying && scan.compact_stability.stable();
        }
        else if (cell.region == Region::counterexample_region) {
            cell.consistent = pair.verdict == DecayVerdict::decaying && !scan.pair_stability.stable();
        }
        return cell;
    });
    return scan;
}

} // namespace specpoll
