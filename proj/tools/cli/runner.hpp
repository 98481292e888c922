#pragma once

// Executes the checks of an ExperimentConfig and writes summary.json plus the
// per-check CSV/JSON artifacts into the output directory.

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "specpoll/catalog.hpp"
#include "specpoll/limitspec.hpp"
#include "specpoll/mapping.hpp"
#include "specpoll/perturb.hpp"

namespace specpoll::cli
{

/// Doubles are written with 17 significant digits so they round-trip.
class CsvWriter
{
  public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path)
    {
        if (!out_)
            throw std::runtime_error("cannot write " + path.string());
        out_ << std::setprecision(17);
        for (std::size_t i = 0; i < header.size(); ++i)
            out_ << (i ? "," : "") << header[i];
        out_ << '\n';
    }

    template <class... Ts>
    void row(const Ts&... cells)
    {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
        out_ << '\n';
    }

  private:
    static std::string cell(double x)
    {
        if (std::isnan(x))
            return "";
        std::ostringstream s;
        s << std::setprecision(17) << x;
        return s.str();
    }
    static std::string cell(std::size_t x) { return std::to_string(x); }
    static std::string cell(long long x) { return std::to_string(x); }
    static std::string cell(const std::string& x) { return x; }
    static std::string cell(const char* x) { return x; }

    std::ofstream out_;
};

/// JSON cannot carry inf/nan; they are written as strings.
inline json num(double x)
{
    if (std::isfinite(x))
        return x;
    if (std::isnan(x))
        return "nan";
    return x > 0 ? "inf" : "-inf";
}

inline json nums(const std::vector<double>& v)
{
    json a = json::array();
    for (double x : v)
        a.push_back(num(x));
    return a;
}

struct RunResult
{
    json summary;
    bool passed = true;
};

namespace detail
{

inline double scaled(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (double x : a)
        m = std::max(m, std::abs(x));
    for (double x : b)
        m = std::max(m, std::abs(x));
    return 1.0 + m;
}

/// Expected label of the truth point nearest to a center, if it is within `sep`.
inline std::optional<ClusterLabel> expected_label(const catalog::ExpectedLimits& e, double lo, double hi, double x,
                                                  double sep)
{
    std::optional<ClusterLabel> best;
    double dist = sep;
    auto visit = [&](const std::vector<double>& pts, ClusterLabel l) {
        for (double p : pts)
            if (std::abs(p - x) <= dist) {
                dist = std::abs(p - x);
                best = l;
            }
    };
    visit(e.essential_in(lo, hi), ClusterLabel::essential);
    visit(e.discrete_in(lo, hi), ClusterLabel::discrete);
    visit(e.pollution_in(lo, hi), ClusterLabel::pollution);
    return best;
}

inline json cluster_json(const Cluster& c)
{
    json j;
    j["id"] = c.id;
    j["center"] = num(c.center);
    j["drift"] = num(c.drift);
    j["persistence"] = c.persistence;
    j["label"] = to_string(c.label);
    j["reason"] = c.diagnostics.reason;
    j["rank_counts"] = c.diagnostics.rank_counts;
    j["window_dims"] = c.diagnostics.window_dims;
    json trace = json::array();
    for (const auto& w : c.diagnostics.sigma_min_trace)
        trace.push_back(nums(w));
    j["sigma_min_trace"] = trace;
    if (c.diagnostics.truth_multiplicity)
        j["truth_multiplicity"] = c.diagnostics.truth_multiplicity;
    return j;
}

inline json estimate_json(const LimitSetEstimate& est)
{
    json j;
    j["window"] = {num(est.window.first), num(est.window.second)};
    j["n_schedule"] = est.n_schedule;
    j["hausdorff_trace"] = nums(est.hausdorff_trace);
    j["centers"] = nums(est.centers());
    json cl = json::array();
    for (const auto& c : est.clusters)
        cl.push_back(cluster_json(c));
    j["clusters"] = cl;
    return j;
}

/// Largest sigma_min over the weak-null windows at schedule position l (NaN if unknown).
inline double sigma_min_at(const Cluster& c, std::size_t l)
{
    double best = std::numeric_limits<double>::quiet_NaN();
    for (const auto& w : c.diagnostics.sigma_min_trace)
        if (l < w.size() && !std::isnan(w[l]))
            best = std::isnan(best) ? w[l] : std::max(best, w[l]);
    return best;
}

inline void write_spectral_flow(const LimitSetEstimate& est, const std::filesystem::path& path)
{
    CsvWriter csv(path, {"n", "eigenvalue_index", "value", "cluster_id", "sigma_min", "rank_count", "residual"});
    for (std::size_t l = 0; l < est.levels.size(); ++l) {
        const auto& level = est.levels[l];
        for (std::size_t col = 0; col < level.window_positions.size(); ++col) {
            const Cluster* owner = nullptr;
            for (const auto& c : est.clusters)
                for (const auto& m : c.members[l])
                    if (m.column == col)
                        owner = &c;
            const double sigma = owner ? sigma_min_at(*owner, l) : std::numeric_limits<double>::quiet_NaN();
            std::string rank;
            if (owner && l < owner->diagnostics.rank_counts.size())
                rank = std::to_string(owner->diagnostics.rank_counts[l]);
            csv.row(level.n, level.window_positions[col], level.all_values[level.window_positions[col]],
                    owner ? std::to_string(owner->id) : std::string(), sigma, rank, level.residuals[col]);
        }
    }
}

} // namespace detail

class Runner
{
  public:
    explicit Runner(ExperimentConfig config) : config_(std::move(config)), subject_(build_subject(config_)) {}

    RunResult run()
    {
        std::filesystem::create_directories(config_.output_dir);
        result_.summary["subject"] = subject_.name;
        if (config_.example)
            result_.summary["params"] = catalog::resolve_params(*config_.example, config_.params);
        result_.summary["checks"] = json::object();
        try {
            run_checks();
        }
        catch (const std::exception& e) {
            // keep whatever finished and say why the run stopped
            result_.summary["error"] = e.what();
            result_.summary["passed"] = false;
            write_summary();
            throw;
        }
        result_.summary["passed"] = result_.passed;
        write_summary();
        return result_;
    }

  private:
    void write_summary() const
    {
        std::ofstream(path("summary.json")) << std::setw(2) << result_.summary << '\n';
    }

    void run_checks()
    {
        if (!subject_.op) {
            left_shift_only();
        }
        else {
            if (config_.wants("limit_set") || config_.wants("classify"))
                limit_set();
            if (config_.wants("mapping"))
                mapping();
            if (config_.wants("mapping_failure"))
                mapping_failure();
            if (config_.wants("perturb_probe"))
                perturb_probe();
            if (config_.wants("stability"))
                stability();
            if (config_.wants("region_scan"))
                region();
        }
    }

    [[nodiscard]] std::filesystem::path path(const std::string& file) const
    {
        return std::filesystem::path(config_.output_dir) / file;
    }

    void record(const std::string& check, json body, bool passed)
    {
        body["passed"] = passed;
        result_.summary["checks"][check] = std::move(body);
        result_.passed = result_.passed && passed;
    }

    // The left shift has no self-adjoint block structure; only its exact
    // triangular compressions are reported.
    void left_shift_only()
    {
        for (const auto& c : config_.checks)
            if (c != "limit_set")
                throw ConfigError(subject_.name + ": only the limit_set check is available");
        CsvWriter csv(path("spectral_flow.csv"),
                      {"n", "eigenvalue_index", "value", "cluster_id", "sigma_min", "rank_count", "residual"});
        double worst = 0.0;
        for (std::size_t n : config_.n_schedule) {
            const auto values = catalog::triangular_spectrum(catalog::left_shift_compression(n));
            for (std::size_t i = 0; i < values.size(); ++i) {
                worst = std::max(worst, std::abs(values[i]));
                csv.row(n, i, values[i], std::string("0"), std::numeric_limits<double>::quiet_NaN(), std::string(),
                        std::numeric_limits<double>::quiet_NaN());
            }
        }
        json body;
        body["centers"] = {0.0};
        body["max_abs_eigenvalue"] = worst;
        body["expected"] = {0.0};
        record("limit_set", body, worst == 0.0);
    }

    void limit_set()
    {
        auto est = estimate_limit_set(*subject_.op, subject_.sequence, config_.window, config_.n_schedule,
                                      config_.limit_options);
        if (config_.wants("classify"))
            classify_all(est, subject_.op->truth(), config_.classify_options);
        detail::write_spectral_flow(est, path("spectral_flow.csv"));
        const auto [lo, hi] = config_.window;

        if (config_.wants("limit_set")) {
            json body = detail::estimate_json(est);
            bool passed = true;
            if (subject_.expected) {
                auto expected = subject_.expected->limit_set_in(lo, hi);
                const auto pol = subject_.expected->pollution_in(lo, hi);
                expected.insert(expected.end(), pol.begin(), pol.end());
                std::sort(expected.begin(), expected.end());
                const auto centers = est.centers();
                double d = 0.0;
                if (centers.empty() != expected.empty())
                    d = std::numeric_limits<double>::infinity();
                else if (!centers.empty())
                    d = hausdorff(centers, expected);
                const double bound = config_.limit_hausdorff * detail::scaled(centers, expected);
                body["expected"] = nums(expected);
                body["hausdorff_to_expected"] = num(d);
                body["tolerance"] = bound;
                passed = d <= bound;
            }
            record("limit_set", body, passed);
        }

        if (config_.wants("classify")) {
            json body;
            json labels = json::array();
            bool passed = true;
            for (const auto& c : est.clusters) {
                json item{{"center", num(c.center)}, {"label", to_string(c.label)}, {"reason", c.diagnostics.reason}};
                bool ok = c.label != ClusterLabel::undetermined;
                if (subject_.expected) {
                    const auto want = detail::expected_label(*subject_.expected, lo, hi, c.center,
                                                             config_.classify_options.cluster_sep);
                    item["expected"] = want ? to_string(*want) : "none";
                    ok = want && *want == c.label;
                }
                item["ok"] = ok;
                passed = passed && ok;
                labels.push_back(item);
            }
            body["clusters"] = labels;
            if (!config_.wants("limit_set"))
                body["estimate"] = detail::estimate_json(est);
            record("classify", body, passed);
        }
    }

    void mapping()
    {
        const auto& op = *subject_.op;
        const auto shifts = config_.mapping.shifts.empty() ? default_shifts(op) : config_.mapping.shifts;
        const auto checks = check_mapping_sweep(op, subject_.sequence, shifts, config_.mapping.levels,
                                                config_.limit_options.max_condition);
        CsvWriter csv(path("mapping_pairs.csv"), {"a", "n", "lambda", "image", "resolvent_value", "difference"});
        bool passed = true;
        double worst = 0.0;
        json per = json::array();
        for (const auto& c : checks) {
            passed = passed && c.passed();
            worst = std::max(worst, c.max_mismatch);
            const std::size_t m = c.resolvent_spectrum.size();
            for (std::size_t i = 0; i < c.forward.size(); ++i) {
                // images come in decreasing order; pair with the resolvent spectrum read backwards
                const double mu = i < m ? c.resolvent_spectrum[m - 1 - i] : std::numeric_limits<double>::quiet_NaN();
                csv.row(c.a, c.n, c.forward[i].first, c.forward[i].second, mu, std::abs(mu - c.forward[i].second));
            }
            per.push_back({{"a", c.a},
                           {"n", c.n},
                           {"max_mismatch", num(c.max_mismatch)},
                           {"tolerance", c.tolerance},
                           {"gram_condition", num(c.gram_condition)}});
        }
        json body{{"shifts", shifts}, {"levels", config_.mapping.levels}, {"max_mismatch", num(worst)}, {"runs", per}};

        if (config_.mapping.limit) {
            const auto lim = check_limit_mapping(op, subject_.sequence, shifts.front(), config_.window,
                                                 config_.n_schedule, config_.limit_options, config_.classify_options);
            body["limit"] = {{"a", lim.a},
                             {"direct_centers", nums(lim.direct.centers())},
                             {"mapped_centers", nums(lim.mapped_centers)},
                             {"resolvent_centers", nums(lim.inverse.centers())},
                             {"center_mismatch", num(lim.center_mismatch)},
                             {"tolerance", lim.tolerance},
                             {"labels_agree", lim.labels_agree},
                             {"zero_cluster", lim.zero_cluster},
                             {"expect_zero_cluster", lim.expect_zero_cluster},
                             {"passed", lim.passed()}};
            passed = passed && lim.passed();
        }
        record("mapping", body, passed);
    }

    void mapping_failure()
    {
        const auto rep = demonstrate_mapping_failure_indefinite(config_.mapping_failure.lambda,
                                                                config_.mapping_failure.levels);
        CsvWriter csv(path("mapping_failure.csv"),
                      {"n", "direct_value", "direct_error", "taylor_bound", "inverse_distance", "inverse_radius"});
        for (std::size_t i = 0; i < rep.levels.size(); ++i)
            csv.row(rep.levels[i], rep.direct_value[i], rep.direct_error[i], rep.taylor_bound[i],
                    rep.inverse_distance[i], rep.inverse_radius[i]);
        json body{{"lambda", rep.lambda},
                  {"margin", rep.margin},
                  {"direct_converges", rep.direct_converges()},
                  {"inverse_excludes", rep.inverse_excludes()}};
        record("mapping_failure", body, rep.contradiction());
    }

    void perturb_probe()
    {
        const auto& p = config_.perturb;
        const auto B = build_partner(subject_, p.partner);
        const auto probe = probe_compactness(*subject_.op, B, p.family, p.a, p.alpha, p.beta, p.k_max);
        CsvWriter csv(path("decay.csv"), {"k", "block_norm"});
        for (std::size_t i = 0; i < probe.blocks.size(); ++i)
            csv.row(probe.blocks[i], probe.block_norms[i]);
        json body{{"family", to_string(p.family)},
                  {"partner", B.name()},
                  {"a", p.a},
                  {"alpha", p.alpha},
                  {"beta", p.beta},
                  {"k_max", p.k_max},
                  {"verdict", to_string(probe.verdict)},
                  {"fit", num(probe.fit)},
                  {"tail_max", num(probe.tail_max)},
                  {"domain_condition", probe.domain_condition},
                  {"condition_fit", num(probe.condition_fit)}};
        bool passed = true;
        if (p.expect) {
            body["expect"] = to_string(*p.expect);
            passed = probe.verdict == *p.expect;
        }
        record("perturb_probe", body, passed);
    }

    void stability()
    {
        const auto B = build_partner(subject_, config_.stability.partner);
        const auto rep = stability_compare(*subject_.op, B, subject_.sequence, config_.window, config_.n_schedule,
                                           config_.limit_options, config_.classify_options, config_.limit_options.tol);
        json body{{"partner", B.name()},
                  {"ess_a", nums(rep.ess_a)},
                  {"ess_b", nums(rep.ess_b)},
                  {"distance", num(rep.distance)},
                  {"tolerance", rep.tolerance},
                  {"stable", rep.stable()}};
        bool passed = true;
        if (config_.stability.expect_stable) {
            body["expect_stable"] = *config_.stability.expect_stable;
            passed = rep.stable() == *config_.stability.expect_stable;
        }
        record("stability", body, passed);
    }

    void region()
    {
        const auto scan = region_scan(config_.region_scan);
        json cells = json::array();
        for (const auto& c : scan.cells) {
            json j{{"alpha", c.alpha},
                   {"beta", c.beta},
                   {"region", to_string(c.region)},
                   {"pair_verdict", to_string(c.pair_verdict)},
                   {"pair_fit", num(c.pair_fit)},
                   {"pair_tail_max", num(c.pair_tail_max)},
                   {"consistent", c.consistent}};
            if (c.compact_verdict)
                j["compact_verdict"] = to_string(*c.compact_verdict);
            cells.push_back(j);
        }
        const auto& o = scan.options;
        json doc{{"ell", o.ell},
                 {"r", o.r},
                 {"grid", o.grid},
                 {"k_max", o.k_max},
                 {"a", o.a},
                 {"compact_mu", o.compact_mu},
                 {"pair_stability", {{"ess_a", nums(scan.pair_stability.ess_a)},
                                     {"ess_b", nums(scan.pair_stability.ess_b)},
                                     {"distance", num(scan.pair_stability.distance)}}},
                 {"compact_stability", {{"ess_a", nums(scan.compact_stability.ess_a)},
                                        {"ess_b", nums(scan.compact_stability.ess_b)},
                                        {"distance", num(scan.compact_stability.distance)}}},
                 {"cells", cells}};
        std::ofstream(path("region_scan.json")) << std::setw(2) << doc << '\n';
        json body{{"corollary_cells", scan.count(Region::corollary_region)},
                  {"counterexample_cells", scan.count(Region::counterexample_region)},
                  {"neither_cells", scan.count(Region::neither)},
                  {"dichotomy_holds", scan.dichotomy_holds()}};
        record("region_scan", body, scan.dichotomy_holds());
    }

    ExperimentConfig config_;
    Subject subject_;
    RunResult result_;
};

} // namespace specpoll::cli
