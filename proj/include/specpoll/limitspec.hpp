#pragma once

// Limiting spectra from finite-n data.
//
// A LimitSetEstimate is a fold over the compressions at the schedule points:
// eigenvalues inside the window are clumped at each level, chained backwards
// from the largest n, and kept when the chain survives the last half of the
// schedule. classify_cluster then separates limiting essential from limiting
// discrete points with the rank test and a finite-window weak-null proxy.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "galerkin.hpp"
#include "parallel.hpp"
#include "sparse_vector.hpp"
#include "spectral_truth.hpp"

namespace specpoll
{

// ---------------------------------------------------------------------------
// Hausdorff distance

/// sup over a of the distance from a to the set b.
inline double directed_hausdorff(std::span<const double> a, std::span<const double> b)
{
    if (a.empty() || b.empty())
        throw InvalidArgument("hausdorff: both sets must be nonempty");
    std::vector<double> sorted(b.begin(), b.end());
    std::sort(sorted.begin(), sorted.end());
    double worst = 0.0;
    for (double x : a) {
        auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
        double best = std::numeric_limits<double>::infinity();
        if (it != sorted.end())
            best = *it - x;
        if (it != sorted.begin())
            best = std::min(best, x - *std::prev(it));
        worst = std::max(worst, best);
    }
    return worst;
}

inline double hausdorff(std::span<const double> a, std::span<const double> b)
{
    return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

// ---------------------------------------------------------------------------
// Data types

enum class ClusterLabel
{
    essential,
    discrete,
    pollution,
    undetermined,
};

inline const char* to_string(ClusterLabel l)
{
    switch (l) {
    case ClusterLabel::essential:
        return "essential";
    case ClusterLabel::discrete:
        return "discrete";
    case ClusterLabel::pollution:
        return "pollution";
    case ClusterLabel::undetermined:
        return "undetermined";
    }
    return "undetermined";
}

/// Windowed part of one compression, with eigenvectors for the windowed values.
struct LevelSpectrum
{
    std::size_t n = 0;
    std::size_t dimension = 0;
    double gram_condition = 1.0;
    /// Full sorted spectrum of A_n.
    std::vector<double> all_values;
    /// Positions in all_values of the eigenvalues inside the window.
    std::vector<std::size_t> window_positions;
    std::vector<BasisIndex> support;
    /// Column c is the eigenvector of all_values[window_positions[c]].
    Eigen::MatrixXd vectors;
    std::vector<double> residuals;

    [[nodiscard]] std::vector<double> windowed() const
    {
        std::vector<double> out;
        for (auto p : window_positions)
            out.push_back(all_values[p]);
        return out;
    }

    [[nodiscard]] double component(std::size_t column, BasisIndex j) const
    {
        auto it = std::lower_bound(support.begin(), support.end(), j);
        if (it == support.end() || *it != j)
            return 0.0;
        return vectors(it - support.begin(), static_cast<Eigen::Index>(column));
    }

    /// Eigenvalues of A_n in the open interval (lo, hi).
    [[nodiscard]] std::size_t count_in(double lo, double hi) const
    {
        return static_cast<std::size_t>(std::count_if(all_values.begin(), all_values.end(),
                                                      [&](double x) { return x > lo && x < hi; }));
    }
};

struct ClusterMember
{
    double value = 0.0;
    /// Column of the eigenvector in LevelSpectrum::vectors.
    std::size_t column = 0;
};

struct ClusterDiagnostics
{
    /// Window dimensions J used for the weak-null proxy.
    std::vector<std::size_t> window_dims;
    /// sigma_min_trace[w][l]: smallest singular value of the J_w x m overlap
    /// matrix at schedule position l; NaN where the cluster is absent.
    std::vector<std::vector<double>> sigma_min_trace;
    /// Eigenvalues of A_n in (center - eps, center + eps) per schedule position.
    std::vector<std::size_t> rank_counts;
    /// |<probe, y>| per schedule position and cluster member.
    std::vector<std::vector<double>> e0_overlaps;
    BasisIndex probe;
    /// Multiplicity of the matched truth eigenvalue (0 if none or essential).
    std::size_t truth_multiplicity = 0;
    std::string reason;
};

struct Cluster
{
    std::size_t id = 0;
    double center = 0.0;
    /// members[l] are the eigenvalues at schedule position l.
    std::vector<std::vector<ClusterMember>> members;
    double drift = std::numeric_limits<double>::infinity();
    std::size_t persistence = 0;
    ClusterLabel label = ClusterLabel::undetermined;
    ClusterDiagnostics diagnostics;

    [[nodiscard]] std::size_t size_at(std::size_t level) const { return members[level].size(); }
};

struct LimitSetEstimate
{
    std::pair<double, double> window;
    std::vector<Cluster> clusters;
    std::vector<std::size_t> n_schedule;
    /// Hausdorff distance between windowed spectra at consecutive schedule points.
    std::vector<double> hausdorff_trace;
    std::vector<LevelSpectrum> levels;
    double tol = 1e-3;

    [[nodiscard]] std::vector<double> centers() const
    {
        std::vector<double> out;
        for (const auto& c : clusters)
            out.push_back(c.center);
        return out;
    }

    [[nodiscard]] std::vector<double> centers_with(std::initializer_list<ClusterLabel> labels) const
    {
        std::vector<double> out;
        for (const auto& c : clusters)
            if (std::find(labels.begin(), labels.end(), c.label) != labels.end())
                out.push_back(c.center);
        return out;
    }

    /// Cluster whose center is closest to x, if any.
    [[nodiscard]] const Cluster* nearest(double x) const
    {
        const Cluster* best = nullptr;
        for (const auto& c : clusters)
            if (!best || std::abs(c.center - x) < std::abs(best->center - x))
                best = &c;
        return best;
    }
};

struct LimitSetOptions
{
    /// Linking radius factor: values within tol * (1 + |x|) are linked.
    double tol = 1e-3;
    /// Half-width of the rank-count interval.
    double rank_eps = 1e-2;
    double max_condition = 1e8;
    /// Vector used for overlap diagnostics; default: smallest index at the first level.
    std::optional<BasisIndex> probe;
};

// ---------------------------------------------------------------------------
// Estimation

namespace detail
{

inline LevelSpectrum make_level(const CompressionResult& r, double lo, double hi)
{
    LevelSpectrum level;
    level.n = r.n;
    level.dimension = r.dimension();
    level.gram_condition = r.gram_condition;
    level.all_values = r.eigenvalues;
    level.support = r.support;
    for (std::size_t i = 0; i < r.eigenvalues.size(); ++i)
        if (r.eigenvalues[i] > lo && r.eigenvalues[i] < hi)
            level.window_positions.push_back(i);
    level.vectors.resize(r.eigenvectors.rows(), static_cast<Eigen::Index>(level.window_positions.size()));
    for (std::size_t c = 0; c < level.window_positions.size(); ++c) {
        const auto p = level.window_positions[c];
        level.vectors.col(static_cast<Eigen::Index>(c)) = r.eigenvectors.col(static_cast<Eigen::Index>(p));
        level.residuals.push_back(r.residuals[p]);
    }
    return level;
}

struct Clump
{
    std::vector<ClusterMember> members;
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] double mean() const
    {
        double s = 0.0;
        for (const auto& m : members)
            s += m.value;
        return s / static_cast<double>(members.size());
    }
};

inline double link_radius(double tol, double x) { return tol * (1.0 + std::abs(x)); }

/// Single-linkage clumps of the windowed eigenvalues of one level.
inline std::vector<Clump> clumps_of(const LevelSpectrum& level, double tol)
{
    std::vector<Clump> out;
    for (std::size_t c = 0; c < level.window_positions.size(); ++c) {
        const double x = level.all_values[level.window_positions[c]];
        if (!out.empty() && x - out.back().hi <= link_radius(tol, x)) {
            out.back().members.push_back({x, c});
            out.back().hi = x;
        }
        else
            out.push_back({{{x, c}}, x, x});
    }
    return out;
}

inline double gap(const Clump& a, double lo, double hi)
{
    if (a.hi < lo)
        return lo - a.hi;
    if (a.lo > hi)
        return a.lo - hi;
    return 0.0;
}

} // namespace detail

/// Clusters limit points of the compression spectra inside `window`.
template <LinearOperator Op>
LimitSetEstimate estimate_limit_set(const Op& op, const GalerkinSequence& seq, std::pair<double, double> window,
                                    std::span<const std::size_t> n_schedule, const LimitSetOptions& options = {})
{
    const auto [lo, hi] = window;
    if (!(lo < hi))
        throw InvalidArgument("estimate_limit_set: window is empty");
    if (n_schedule.size() < 4)
        throw InvalidArgument("estimate_limit_set: schedule needs at least 4 levels");
    for (std::size_t i = 1; i < n_schedule.size(); ++i)
        if (n_schedule[i] <= n_schedule[i - 1])
            throw InvalidArgument("estimate_limit_set: schedule must be strictly increasing");

    LimitSetEstimate est;
    est.window = window;
    est.n_schedule.assign(n_schedule.begin(), n_schedule.end());
    est.tol = options.tol;
    CompressOptions copts;
    copts.max_condition = options.max_condition;
    est.levels = parallel_map(n_schedule.size(), [&](std::size_t i) {
        return detail::make_level(compress(op, seq, n_schedule[i], copts), lo, hi);
    });
    const std::size_t last = est.levels.size() - 1;

    for (std::size_t l = 1; l <= last; ++l) {
        const auto a = est.levels[l - 1].windowed();
        const auto b = est.levels[l].windowed();
        if (a.empty() && b.empty())
            est.hausdorff_trace.push_back(0.0);
        else if (a.empty() || b.empty())
            est.hausdorff_trace.push_back(std::numeric_limits<double>::infinity());
        else
            est.hausdorff_trace.push_back(hausdorff(a, b));
    }

    // chain clumps backwards from the largest n
    std::vector<std::vector<detail::Clump>> clumps;
    for (const auto& level : est.levels)
        clumps.push_back(detail::clumps_of(level, options.tol));
    struct Chain
    {
        std::vector<std::vector<ClusterMember>> members;
        double lo, hi;
        bool alive = true;
        std::size_t persistence = 1;
    };
    std::vector<Chain> chains;
    for (const auto& c : clumps[last]) {
        Chain ch{std::vector<std::vector<ClusterMember>>(est.levels.size()), c.lo, c.hi};
        ch.members[last] = c.members;
        chains.push_back(std::move(ch));
    }
    for (std::size_t l = last; l-- > 0;) {
        std::vector<std::vector<const detail::Clump*>> linked(chains.size());
        for (const auto& c : clumps[l]) {
            // attach to the closest live chain within the linking radius
            std::optional<std::size_t> best;
            double best_gap = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < chains.size(); ++k) {
                if (!chains[k].alive)
                    continue;
                const double g = detail::gap(c, chains[k].lo, chains[k].hi);
                if (g <= detail::link_radius(options.tol, 0.5 * (chains[k].lo + chains[k].hi)) && g < best_gap) {
                    best = k;
                    best_gap = g;
                }
            }
            if (best)
                linked[*best].push_back(&c);
        }
        for (std::size_t k = 0; k < chains.size(); ++k) {
            if (!chains[k].alive)
                continue;
            if (linked[k].empty()) {
                chains[k].alive = false;
                continue;
            }
            ++chains[k].persistence;
            double clo = std::numeric_limits<double>::infinity(), chi = -clo;
            for (const auto* c : linked[k]) {
                chains[k].members[l].insert(chains[k].members[l].end(), c->members.begin(), c->members.end());
                clo = std::min(clo, c->lo);
                chi = std::max(chi, c->hi);
            }
            chains[k].lo = clo;
            chains[k].hi = chi;
        }
    }

    const std::size_t required = (n_schedule.size() + 1) / 2;
    const BasisIndex probe = options.probe.value_or(est.levels.front().support.empty()
                                                        ? BasisIndex{0}
                                                        : est.levels.front().support.front());
    for (auto& ch : chains) {
        if (ch.persistence < required)
            continue;
        Cluster cl;
        cl.id = est.clusters.size();
        cl.members = std::move(ch.members);
        cl.persistence = ch.persistence;
        auto mean = [](const std::vector<ClusterMember>& m) {
            double s = 0.0;
            for (const auto& x : m)
                s += x.value;
            return s / static_cast<double>(m.size());
        };
        cl.center = mean(cl.members[last]);
        if (!cl.members[last - 1].empty())
            cl.drift = std::abs(cl.center - mean(cl.members[last - 1]));
        cl.diagnostics.probe = probe;
        for (std::size_t l = 0; l <= last; ++l) {
            cl.diagnostics.rank_counts.push_back(
                est.levels[l].count_in(cl.center - options.rank_eps, cl.center + options.rank_eps));
            std::vector<double> overlaps;
            for (const auto& m : cl.members[l])
                overlaps.push_back(std::abs(est.levels[l].component(m.column, probe)));
            cl.diagnostics.e0_overlaps.push_back(std::move(overlaps));
        }
        est.clusters.push_back(std::move(cl));
    }
    std::sort(est.clusters.begin(), est.clusters.end(),
              [](const Cluster& a, const Cluster& b) { return a.center < b.center; });
    for (std::size_t i = 0; i < est.clusters.size(); ++i)
        est.clusters[i].id = i;
    return est;
}

// ---------------------------------------------------------------------------
// Weak-null proxy

/// Eigenvector columns of one cluster at one level, in ambient coordinates.
struct EigenvectorColumns
{
    std::vector<BasisIndex> support;
    Eigen::MatrixXd columns;
};

/// Smallest singular value of the J x m matrix <e_j, y_i>, j < J.
inline double window_sigma_min(const EigenvectorColumns& v, std::size_t window)
{
    const auto m = static_cast<std::size_t>(v.columns.cols());
    if (window < m)
        throw InvalidArgument("weak_null_score: window J = " + std::to_string(window) + " is smaller than the " +
                              std::to_string(m) + " cluster vectors");
    if (m == 0)
        return std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(window), v.columns.cols());
    for (std::size_t r = 0; r < v.support.size() && v.support[r].id < window; ++r)
        overlap.row(static_cast<Eigen::Index>(v.support[r].id)) = v.columns.row(static_cast<Eigen::Index>(r));
    Eigen::BDCSVD<Eigen::MatrixXd> svd(overlap);
    return svd.singularValues().minCoeff();
}

inline std::vector<double> weak_null_score(std::span<const EigenvectorColumns> per_level, std::size_t window)
{
    std::vector<double> out;
    for (const auto& v : per_level)
        out.push_back(window_sigma_min(v, window));
    return out;
}

inline EigenvectorColumns cluster_columns(const LimitSetEstimate& est, const Cluster& c, std::size_t level)
{
    const auto& lv = est.levels[level];
    EigenvectorColumns out;
    out.support = lv.support;
    out.columns.resize(lv.vectors.rows(), static_cast<Eigen::Index>(c.members[level].size()));
    for (std::size_t i = 0; i < c.members[level].size(); ++i)
        out.columns.col(static_cast<Eigen::Index>(i)) = lv.vectors.col(static_cast<Eigen::Index>(c.members[level][i].column));
    return out;
}

// ---------------------------------------------------------------------------
// Classification

struct ClassifyConfig
{
    /// Distance below which a center is identified with a truth point.
    double cluster_sep = 1e-2;
    /// sigma_min below this in every window counts as window-null.
    double weak_null_tol = 1e-6;
    /// sigma_min at or above this in some window counts as bounded away from 0.
    double sigma_floor = 1e-3;
    /// Also test the window spanned by the first-level trial space.
    bool anchor_window = true;
};

struct ClassificationReport
{
    ClusterLabel label = ClusterLabel::undetermined;
    ClusterDiagnostics diagnostics;
};

/// Labels one cluster from the truth of A and the finite-n diagnostics.
inline ClassificationReport classify_cluster(const LimitSetEstimate& est, const Cluster& cluster,
                                             const std::optional<SpectralTruth>& truth,
                                             const ClassifyConfig& config = {})
{
    ClassificationReport report;
    report.diagnostics = cluster.diagnostics;
    auto& diag = report.diagnostics;
    const std::size_t levels = est.levels.size();
    const std::size_t tail_start = levels - (levels + 2) / 3;

    std::optional<std::size_t> mult;
    bool essential_point = false;
    if (truth) {
        essential_point = truth->is_essential(cluster.center, config.cluster_sep);
        if (!essential_point) {
            std::size_t m = 0;
            for (const auto& e : truth->discrete_in(cluster.center - config.cluster_sep, cluster.center + config.cluster_sep))
                m += e.multiplicity;
            if (m > 0)
                mult = m;
        }
    }
    diag.truth_multiplicity = mult.value_or(0);

    // weak-null windows
    std::size_t m = 0;
    for (std::size_t l = tail_start; l < levels; ++l)
        m = std::max(m, cluster.size_at(l));
    const std::size_t k = m + diag.truth_multiplicity;
    diag.window_dims = {k + 2, 2 * k + 4};
    if (config.anchor_window) {
        const auto& first = est.levels.front().support;
        const std::size_t anchor = first.empty() ? 0 : first.back().id + 1;
        if (anchor > diag.window_dims.back())
            diag.window_dims.push_back(anchor);
    }
    diag.sigma_min_trace.assign(diag.window_dims.size(),
                                std::vector<double>(levels, std::numeric_limits<double>::quiet_NaN()));
    for (std::size_t w = 0; w < diag.window_dims.size(); ++w)
        for (std::size_t l = 0; l < levels; ++l)
            if (cluster.size_at(l) > 0 && cluster.size_at(l) <= diag.window_dims[w])
                diag.sigma_min_trace[w][l] = window_sigma_min(cluster_columns(est, cluster, l), diag.window_dims[w]);

    bool null_everywhere = true;
    bool floor_somewhere = false;
    for (std::size_t w = 0; w < diag.window_dims.size(); ++w) {
        bool above = true;
        for (std::size_t l = tail_start; l < levels; ++l) {
            const double s = diag.sigma_min_trace[w][l];
            if (std::isnan(s) || !(s < config.weak_null_tol))
                null_everywhere = false;
            if (std::isnan(s) || !(s >= config.sigma_floor))
                above = false;
        }
        floor_somewhere = floor_somewhere || above;
    }
    bool rank_exceeds = true;
    bool rank_equals = true;
    for (std::size_t l = tail_start; l < levels; ++l) {
        rank_exceeds = rank_exceeds && diag.rank_counts[l] >= diag.truth_multiplicity + 1;
        rank_equals = rank_equals && diag.rank_counts[l] == diag.truth_multiplicity;
    }

    std::ostringstream why;
    why.precision(17);
    auto windows = [&] {
        std::ostringstream os;
        for (std::size_t w = 0; w < diag.window_dims.size(); ++w)
            os << (w ? "," : "") << diag.window_dims[w];
        return os.str();
    };
    if (!truth) {
        report.label = ClusterLabel::undetermined;
        why << "truth unknown";
    }
    else if (essential_point) {
        report.label = ClusterLabel::essential;
        why << "center within " << config.cluster_sep << " of an essential point of A";
    }
    else if (mult) {
        if (rank_exceeds && null_everywhere) {
            report.label = ClusterLabel::essential;
            why << "eigenvalue of multiplicity " << *mult << " with rank count >= " << *mult + 1
                << " and a combination window-null up to J in {" << windows() << "}";
        }
        else if (rank_equals && floor_somewhere) {
            report.label = ClusterLabel::discrete;
            why << "eigenvalue of multiplicity " << *mult << " with matching rank count and sigma_min >= "
                << config.sigma_floor << " in some window";
        }
        else {
            report.label = ClusterLabel::undetermined;
            why << "eigenvalue of multiplicity " << *mult << " with conflicting diagnostics (rank_exceeds="
                << rank_exceeds << ", window_null=" << null_everywhere << ", rank_equals=" << rank_equals
                << ", floor=" << floor_somewhere << ")";
        }
    }
    else if (null_everywhere) {
        report.label = ClusterLabel::pollution;
        why << "center outside the spectrum of A; eigenvectors window-null up to J in {" << windows() << "}";
    }
    else {
        report.label = ClusterLabel::undetermined;
        why << "center outside the spectrum of A but eigenvectors not window-null";
    }
    diag.reason = why.str();
    return report;
}

/// Classifies every cluster in place.
inline void classify_all(LimitSetEstimate& est, const std::optional<SpectralTruth>& truth,
                         const ClassifyConfig& config = {})
{
    for (auto& c : est.clusters) {
        auto report = classify_cluster(est, c, truth, config);
        c.label = report.label;
        c.diagnostics = std::move(report.diagnostics);
    }
}

} // namespace specpoll
