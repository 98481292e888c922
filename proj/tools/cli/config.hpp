#pragma once

// Experiment configuration: parsing and validation of the JSON document
// accepted by `specpoll run`. Everything is validated before any computation.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "specpoll/block_operator.hpp"
#include "specpoll/catalog.hpp"
#include "specpoll/galerkin.hpp"
#include "specpoll/limitspec.hpp"
#include "specpoll/perturb.hpp"

namespace specpoll::cli
{

using nlohmann::json;

/// Configuration problems; mapped to exit code 2.
class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

inline const std::set<std::string>& known_checks()
{
    static const std::set<std::string> checks{"limit_set",    "classify",    "mapping",  "mapping_failure",
                                              "perturb_probe", "region_scan", "stability"};
    return checks;
}

/// Partner operator B for perturbation checks.
struct PartnerSpec
{
    /// "catalog_partner" | "rank_one" | "same"
    std::string kind = "catalog_partner";
    std::size_t index = 1;
    double mu = 0.3;
};

struct MappingSpec
{
    std::vector<double> shifts;
    std::vector<std::size_t> levels;
    bool limit = true;
};

struct MappingFailureSpec
{
    double lambda = 0.5;
    std::vector<std::size_t> levels{1, 2, 3, 5, 10, 20, 50, 100};
};

struct PerturbSpec
{
    ProbeFamily family = ProbeFamily::L_corollary;
    double a = 0.0;
    double alpha = 0.75;
    double beta = 0.5;
    std::size_t k_max = 10000;
    PartnerSpec partner;
    std::optional<DecayVerdict> expect;
};

struct StabilitySpec
{
    PartnerSpec partner;
    std::optional<bool> expect_stable;
};

/// Operator given in the config: 2x2 blocks on (e_n^+, e_n^-) for n = 1..K,
/// then a constant tail block for every n > K.
struct UserOperatorSpec
{
    std::string name = "user";
    std::vector<Eigen::Matrix2d> blocks;
    Eigen::Matrix2d tail = Eigen::Matrix2d::Identity();
    std::optional<double> lower_bound;
    std::optional<std::vector<double>> essential;
    std::vector<Eigenvalue> discrete;
    /// "pairs" | "last_minus" | "rotated_last"
    std::string sequence = "pairs";
    double angle = 0.0;
};

struct ExperimentConfig
{
    std::optional<std::string> example;
    catalog::Params params;
    std::optional<UserOperatorSpec> user_operator;
    std::vector<std::size_t> n_schedule;
    std::pair<double, double> window{0.0, 0.0};
    LimitSetOptions limit_options;
    ClassifyConfig classify_options;
    /// Acceptance bound for the Hausdorff distance to the expected limit set, relative to 1 + |x|.
    double limit_hausdorff = 1e-3;
    std::vector<std::string> checks;
    std::string output_dir = "specpoll_out";
    MappingSpec mapping;
    MappingFailureSpec mapping_failure;
    PerturbSpec perturb;
    RegionScanOptions region_scan;
    StabilitySpec stability;

    [[nodiscard]] bool wants(const std::string& check) const
    {
        return std::find(checks.begin(), checks.end(), check) != checks.end();
    }
};

namespace detail
{

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object())
        throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key))
            throw ConfigError(where + ": unknown key '" + key + "'");
}

inline double number(const json& j, const std::string& where)
{
    if (!j.is_number())
        throw ConfigError(where + ": expected a number");
    const double x = j.get<double>();
    if (!std::isfinite(x))
        throw ConfigError(where + ": expected a finite number");
    return x;
}

inline std::size_t count(const json& j, const std::string& where)
{
    if (!j.is_number_integer() || j.get<long long>() < 0)
        throw ConfigError(where + ": expected a non-negative integer");
    return j.get<std::size_t>();
}

inline std::vector<std::size_t> levels(const json& j, const std::string& where, std::size_t min_length)
{
    if (!j.is_array())
        throw ConfigError(where + ": expected an array of integers");
    std::vector<std::size_t> out;
    for (const auto& x : j)
        out.push_back(count(x, where));
    if (out.size() < min_length)
        throw ConfigError(where + ": needs at least " + std::to_string(min_length) + " entries");
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] == 0)
            throw ConfigError(where + ": levels start at 1");
        if (i > 0 && out[i] <= out[i - 1])
            throw ConfigError(where + ": must be strictly increasing");
    }
    return out;
}

inline Eigen::Matrix2d matrix2(const json& j, const std::string& where)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_array() || !j[1].is_array() || j[0].size() != 2 || j[1].size() != 2)
        throw ConfigError(where + ": expected a 2x2 nested array");
    Eigen::Matrix2d m;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
            m(r, c) = number(j[r][c], where);
    if (m(0, 1) != m(1, 0))
        throw ConfigError(where + ": matrix must be symmetric");
    return m;
}

inline PartnerSpec partner(const json& j, const std::string& where)
{
    reject_unknown(j, {"kind", "index", "mu"}, where);
    PartnerSpec p;
    if (j.contains("kind")) {
        p.kind = j["kind"].get<std::string>();
        if (p.kind != "catalog_partner" && p.kind != "rank_one" && p.kind != "same")
            throw ConfigError(where + ".kind: expected catalog_partner, rank_one or same");
    }
    if (j.contains("index"))
        p.index = count(j["index"], where + ".index");
    if (j.contains("mu"))
        p.mu = number(j["mu"], where + ".mu");
    return p;
}

inline UserOperatorSpec user_operator(const json& j)
{
    reject_unknown(j, {"name", "blocks", "tail", "lower_bound", "truth", "sequence", "angle"}, "operator");
    UserOperatorSpec u;
    if (j.contains("name"))
        u.name = j["name"].get<std::string>();
    if (j.contains("blocks")) {
        if (!j["blocks"].is_array())
            throw ConfigError("operator.blocks: expected an array of 2x2 matrices");
        for (std::size_t i = 0; i < j["blocks"].size(); ++i)
            u.blocks.push_back(matrix2(j["blocks"][i], "operator.blocks[" + std::to_string(i) + "]"));
    }
    if (!j.contains("tail"))
        throw ConfigError("operator.tail: required");
    u.tail = matrix2(j["tail"], "operator.tail");
    if (j.contains("lower_bound"))
        u.lower_bound = number(j["lower_bound"], "operator.lower_bound");
    if (j.contains("truth")) {
        const auto& t = j["truth"];
        reject_unknown(t, {"essential", "discrete"}, "operator.truth");
        std::vector<double> ess;
        if (t.contains("essential"))
            for (const auto& x : t["essential"])
                ess.push_back(number(x, "operator.truth.essential"));
        u.essential = ess;
        if (t.contains("discrete"))
            for (const auto& e : t["discrete"]) {
                if (!e.is_array() || e.size() != 2)
                    throw ConfigError("operator.truth.discrete: expected [value, multiplicity] pairs");
                u.discrete.push_back({number(e[0], "operator.truth.discrete"), count(e[1], "operator.truth.discrete")});
            }
    }
    if (j.contains("sequence")) {
        u.sequence = j["sequence"].get<std::string>();
        if (u.sequence != "pairs" && u.sequence != "last_minus" && u.sequence != "rotated_last")
            throw ConfigError("operator.sequence: expected pairs, last_minus or rotated_last");
    }
    if (j.contains("angle"))
        u.angle = number(j["angle"], "operator.angle");
    return u;
}

} // namespace detail

/// Parses and validates a configuration document.
inline ExperimentConfig parse_config(const json& j)
{
    using namespace detail;
    reject_unknown(j,
                   {"example", "params", "operator", "n_schedule", "window", "tolerances", "checks", "output_dir",
                    "mapping", "mapping_failure", "perturb", "region_scan", "stability"},
                   "config");
    ExperimentConfig c;
    if (j.contains("example") == j.contains("operator"))
        throw ConfigError("config: give exactly one of 'example' and 'operator'");
    if (j.contains("example")) {
        c.example = j["example"].get<std::string>();
        if (j.contains("params")) {
            if (!j["params"].is_object())
                throw ConfigError("params: expected an object");
            for (const auto& [k, v] : j["params"].items())
                c.params[k] = number(v, "params." + k);
        }
        try {
            catalog::resolve_params(*c.example, c.params);
        }
        catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
    }
    else {
        if (j.contains("params"))
            throw ConfigError("params: only valid together with 'example'");
        c.user_operator = user_operator(j["operator"]);
    }

    if (!j.contains("checks") || !j["checks"].is_array() || j["checks"].empty())
        throw ConfigError("checks: expected a nonempty array");
    for (const auto& x : j["checks"]) {
        const auto name = x.get<std::string>();
        if (!known_checks().count(name))
            throw ConfigError("checks: unknown check '" + name + "'");
        c.checks.push_back(name);
    }

    const bool needs_schedule = c.wants("limit_set") || c.wants("classify") || c.wants("stability") ||
                                (c.wants("mapping") && !(j.contains("mapping") && j["mapping"].contains("levels")));
    if (j.contains("n_schedule"))
        c.n_schedule = levels(j["n_schedule"], "n_schedule", 4);
    else if (needs_schedule)
        throw ConfigError("n_schedule: required by the requested checks");

    const bool needs_window = c.wants("limit_set") || c.wants("classify") || c.wants("stability");
    if (j.contains("window")) {
        const auto& w = j["window"];
        if (!w.is_array() || w.size() != 2)
            throw ConfigError("window: expected [lo, hi]");
        c.window = {number(w[0], "window"), number(w[1], "window")};
        if (!(c.window.first < c.window.second))
            throw ConfigError("window: lo must be smaller than hi");
    }
    else if (needs_window) {
        throw ConfigError("window: required by the requested checks");
    }

    if (j.contains("tolerances")) {
        const auto& t = j["tolerances"];
        reject_unknown(t, {"tol", "rank_eps", "max_condition", "cluster_sep", "weak_null_tol", "sigma_floor",
                        "limit_set_hausdorff"},
                       "tolerances");
        auto positive = [&](const char* key, double& into) {
            if (t.contains(key)) {
                into = number(t[key], std::string("tolerances.") + key);
                if (!(into > 0.0))
                    throw ConfigError(std::string("tolerances.") + key + ": must be positive");
            }
        };
        positive("tol", c.limit_options.tol);
        positive("rank_eps", c.limit_options.rank_eps);
        positive("max_condition", c.limit_options.max_condition);
        positive("cluster_sep", c.classify_options.cluster_sep);
        positive("weak_null_tol", c.classify_options.weak_null_tol);
        positive("sigma_floor", c.classify_options.sigma_floor);
        positive("limit_set_hausdorff", c.limit_hausdorff);
    }
    if (j.contains("output_dir"))
        c.output_dir = j["output_dir"].get<std::string>();

    if (j.contains("mapping")) {
        const auto& m = j["mapping"];
        reject_unknown(m, {"shifts", "levels", "limit"}, "mapping");
        if (m.contains("shifts"))
            for (const auto& x : m["shifts"])
                c.mapping.shifts.push_back(number(x, "mapping.shifts"));
        if (m.contains("levels"))
            c.mapping.levels = levels(m["levels"], "mapping.levels", 1);
        if (m.contains("limit"))
            c.mapping.limit = m["limit"].get<bool>();
    }
    if (c.mapping.levels.empty())
        c.mapping.levels = c.n_schedule;
    if (c.wants("mapping") && c.mapping.limit && c.n_schedule.empty())
        throw ConfigError("mapping.limit: needs n_schedule and window");
    if (c.wants("mapping") && c.mapping.limit && !j.contains("window"))
        throw ConfigError("mapping.limit: needs a window");

    if (j.contains("mapping_failure")) {
        const auto& m = j["mapping_failure"];
        reject_unknown(m, {"lambda", "levels"}, "mapping_failure");
        if (m.contains("lambda"))
            c.mapping_failure.lambda = number(m["lambda"], "mapping_failure.lambda");
        if (m.contains("levels"))
            c.mapping_failure.levels = levels(m["levels"], "mapping_failure.levels", 1);
    }
    if (!(c.mapping_failure.lambda > 0.0 && c.mapping_failure.lambda < 1.0))
        throw ConfigError("mapping_failure.lambda: must lie in (0, 1)");

    if (j.contains("perturb")) {
        const auto& p = j["perturb"];
        reject_unknown(p, {"family", "a", "alpha", "beta", "k_max", "partner", "expect"}, "perturb");
        if (p.contains("family")) {
            const auto f = p["family"].get<std::string>();
            if (f == "K_theorem")
                c.perturb.family = ProbeFamily::K_theorem;
            else if (f == "L_corollary")
                c.perturb.family = ProbeFamily::L_corollary;
            else
                throw ConfigError("perturb.family: expected K_theorem or L_corollary");
        }
        if (p.contains("a"))
            c.perturb.a = number(p["a"], "perturb.a");
        if (p.contains("alpha"))
            c.perturb.alpha = number(p["alpha"], "perturb.alpha");
        if (p.contains("beta"))
            c.perturb.beta = number(p["beta"], "perturb.beta");
        if (p.contains("k_max"))
            c.perturb.k_max = count(p["k_max"], "perturb.k_max");
        if (p.contains("partner"))
            c.perturb.partner = partner(p["partner"], "perturb.partner");
        if (p.contains("expect")) {
            const auto e = p["expect"].get<std::string>();
            if (e == "decaying")
                c.perturb.expect = DecayVerdict::decaying;
            else if (e == "non-decaying")
                c.perturb.expect = DecayVerdict::non_decaying;
            else
                throw ConfigError("perturb.expect: expected decaying or non-decaying");
        }
        if (c.perturb.alpha < 0.0 || c.perturb.alpha >= 1.0 || c.perturb.beta < 0.0 || c.perturb.beta >= 1.0)
            throw ConfigError("perturb: alpha and beta must lie in [0, 1)");
        if (c.perturb.k_max < 20)
            throw ConfigError("perturb.k_max: must be at least 20");
    }

    if (j.contains("region_scan")) {
        const auto& r = j["region_scan"];
        reject_unknown(r, {"ell", "r", "grid", "k_max", "a", "compact_mu", "window", "n_schedule"}, "region_scan");
        auto& o = c.region_scan;
        if (r.contains("ell"))
            o.ell = number(r["ell"], "region_scan.ell");
        if (r.contains("r"))
            o.r = number(r["r"], "region_scan.r");
        if (r.contains("grid"))
            o.grid = count(r["grid"], "region_scan.grid");
        if (r.contains("k_max"))
            o.k_max = count(r["k_max"], "region_scan.k_max");
        if (r.contains("a"))
            o.a = number(r["a"], "region_scan.a");
        if (r.contains("compact_mu"))
            o.compact_mu = number(r["compact_mu"], "region_scan.compact_mu");
        if (r.contains("window")) {
            if (!r["window"].is_array() || r["window"].size() != 2)
                throw ConfigError("region_scan.window: expected [lo, hi]");
            o.window = {number(r["window"][0], "region_scan.window"), number(r["window"][1], "region_scan.window")};
        }
        if (r.contains("n_schedule"))
            o.n_schedule = levels(r["n_schedule"], "region_scan.n_schedule", 4);
        if (o.grid == 0 || o.grid > 200)
            throw ConfigError("region_scan.grid: must lie in [1, 200]");
        if (o.k_max < 20)
            throw ConfigError("region_scan.k_max: must be at least 20");
        if (!(o.ell > 0.0 && o.ell <= 4.0 && o.r > 0.0 && o.r <= 4.0))
            throw ConfigError("region_scan: ell and r must lie in (0, 4]");
    }

    if (j.contains("stability")) {
        const auto& s = j["stability"];
        reject_unknown(s, {"partner", "expect_stable"}, "stability");
        if (s.contains("partner"))
            c.stability.partner = partner(s["partner"], "stability.partner");
        if (s.contains("expect_stable"))
            c.stability.expect_stable = s["expect_stable"].get<bool>();
    }

    if ((c.wants("region_scan") || c.wants("mapping_failure")) && c.user_operator)
        throw ConfigError("region_scan and mapping_failure use catalog operators; give an 'example'");
    return c;
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    }
    catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        return parse_config(j);
    }
    catch (const json::exception& e) {
        throw ConfigError(std::string("config has a value of the wrong type: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Operator assembly

struct Subject
{
    std::string name;
    std::optional<BlockOperator> op;
    GalerkinSequence sequence;
    std::optional<catalog::ExpectedLimits> expected;
    std::optional<BlockOperator> partner;
};

inline Subject build_user_subject(const UserOperatorSpec& u)
{
    Subject s;
    s.name = u.name;
    std::optional<SpectralTruth> truth;
    if (u.essential) {
        auto discrete = u.discrete;
        truth = SpectralTruth(*u.essential, [discrete](double lo, double hi) {
            std::vector<Eigenvalue> out;
            for (const auto& e : discrete)
                if (e.value > lo && e.value < hi)
                    out.push_back(e);
            return out;
        });
    }
    auto blocks = u.blocks;
    auto tail = u.tail;
    s.op = BlockOperator(
        u.name,
        [blocks, tail](std::size_t n) {
            const Eigen::Matrix2d& m = n <= blocks.size() ? blocks[n - 1] : tail;
            return SymBlock{{catalog::e_plus(n), catalog::e_minus(n)}, Eigen::MatrixXd(m)};
        },
        [](BasisIndex i) { return i.id == 0 ? std::nullopt : std::optional<std::size_t>((i.id + 1) / 2); },
        u.lower_bound, truth, 1);
    const std::string kind = u.sequence;
    const double angle = u.angle;
    s.sequence.name = u.name + ":" + kind;
    s.sequence.first_level = 1;
    s.sequence.span_gen = [kind, angle](std::size_t n) {
        std::vector<SparseVector> out;
        for (std::size_t k = 1; k < n; ++k) {
            out.push_back(SparseVector::unit(catalog::e_plus(k)));
            out.push_back(SparseVector::unit(catalog::e_minus(k)));
        }
        if (kind == "pairs") {
            out.push_back(SparseVector::unit(catalog::e_plus(n)));
            out.push_back(SparseVector::unit(catalog::e_minus(n)));
        }
        else if (kind == "last_minus") {
            out.push_back(SparseVector::unit(catalog::e_minus(n)));
        }
        else {
            out.push_back(SparseVector{{catalog::e_plus(n), std::cos(angle)}, {catalog::e_minus(n), std::sin(angle)}});
        }
        return out;
    };
    return s;
}

inline Subject build_subject(const ExperimentConfig& c)
{
    if (c.user_operator)
        return build_user_subject(*c.user_operator);
    auto ex = catalog::get_example(*c.example, c.params);
    Subject s;
    s.name = ex.name;
    s.op = ex.op;
    s.sequence = ex.sequence;
    s.expected = ex.expected;
    s.partner = ex.partner;
    return s;
}

inline BlockOperator build_partner(const Subject& s, const PartnerSpec& p)
{
    if (p.kind == "same")
        return *s.op;
    if (p.kind == "rank_one")
        return with_rank_one(*s.op, BasisIndex{p.index}, p.mu);
    if (!s.partner)
        throw ConfigError(s.name + ": has no catalog partner; use partner.kind rank_one or same");
    return *s.partner;
}

} // namespace specpoll::cli
