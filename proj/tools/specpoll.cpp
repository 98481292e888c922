// specpoll: command line front end.
//
// Exit codes: 0 success, 1 a check failed, 2 configuration error,
// 3 numerical contract violation (conditioning or domain).

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "cli/config.hpp"
#include "cli/listing.hpp"
#include "cli/runner.hpp"
#include "specpoll/errors.hpp"
#include "specpoll/mapping.hpp"
#include "specpoll/perturb.hpp"

namespace
{

using namespace specpoll;
using specpoll::cli::json;

constexpr int kCheckFailed = 1;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

catalog::Params parse_params(const std::vector<std::string>& raw)
{
    catalog::Params out;
    for (const auto& kv : raw) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw cli::ConfigError("--param expects name=value, got '" + kv + "'");
        try {
            std::size_t used = 0;
            out[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1), &used);
            if (used != kv.size() - eq - 1)
                throw std::invalid_argument(kv);
        }
        catch (const std::logic_error&) {
            throw cli::ConfigError("--param value is not a number: '" + kv + "'");
        }
    }
    return out;
}

void print(const json& j) { std::cout << std::setw(2) << j << '\n'; }

/// Best effort: record a configuration error in summary.json when the
/// document names an output directory.
void write_config_error(const std::string& path, const std::string& what)
{
    try {
        std::ifstream in(path);
        const auto j = json::parse(in);
        if (!j.is_object() || !j.contains("output_dir") || !j["output_dir"].is_string())
            return;
        const std::filesystem::path dir = j["output_dir"].get<std::string>();
        std::filesystem::create_directories(dir);
        std::ofstream(dir / "summary.json") << std::setw(2) << json{{"error", what}, {"passed", false}} << '\n';
    }
    catch (const std::exception&) {
    }
}

int run_config(const std::string& path)
{
    cli::ExperimentConfig config;
    try {
        config = cli::load_config(path);
    }
    catch (const cli::ConfigError& e) {
        write_config_error(path, e.what());
        throw;
    }
    cli::Runner runner(std::move(config));
    const auto result = runner.run();
    print(result.summary);
    return result.passed ? 0 : kCheckFailed;
}

int map_check(const std::string& example, const std::vector<std::string>& params, std::vector<double> shifts,
              const std::vector<std::size_t>& levels)
{
    cli::ExperimentConfig c;
    c.example = example;
    c.params = parse_params(params);
    const auto subject = cli::build_subject(c);
    if (!subject.op)
        throw cli::ConfigError(example + ": has no self-adjoint operator");
    if (shifts.empty())
        shifts = default_shifts(*subject.op);
    const auto checks = check_mapping_sweep(*subject.op, subject.sequence, shifts, levels);
    json runs = json::array();
    bool passed = true;
    for (const auto& r : checks) {
        runs.push_back({{"a", r.a}, {"n", r.n}, {"max_mismatch", cli::num(r.max_mismatch)}, {"passed", r.passed()}});
        passed = passed && r.passed();
    }
    print({{"example", example}, {"shifts", shifts}, {"runs", runs}, {"passed", passed}});
    return passed ? 0 : kCheckFailed;
}

struct PerturbArgs
{
    std::string example = "optimality_blocks";
    std::vector<std::string> params;
    std::string family = "L_corollary";
    double alpha = 0.75;
    double beta = 0.5;
    double a = 0.0;
    std::size_t k_max = 10000;
    std::string partner = "catalog_partner";
    std::size_t index = 1;
    double mu = 0.3;
};

int perturb_check(const PerturbArgs& args)
{
    cli::ExperimentConfig c;
    c.example = args.example;
    c.params = parse_params(args.params);
    const auto subject = cli::build_subject(c);
    if (!subject.op)
        throw cli::ConfigError(args.example + ": has no self-adjoint operator");
    const auto B = cli::build_partner(subject, {args.partner, args.index, args.mu});
    const auto family = args.family == "K_theorem" ? ProbeFamily::K_theorem : ProbeFamily::L_corollary;
    const auto probe = probe_compactness(*subject.op, B, family, args.a, args.alpha, args.beta, args.k_max);
    json out{{"example", args.example},
             {"partner", B.name()},
             {"family", to_string(family)},
             {"alpha", args.alpha},
             {"beta", args.beta},
             {"a", args.a},
             {"k_max", args.k_max},
             {"verdict", to_string(probe.verdict)},
             {"fit", cli::num(probe.fit)},
             {"tail_max", cli::num(probe.tail_max)},
             {"domain_condition", probe.domain_condition}};
    if (family == ProbeFamily::L_corollary && args.example == "optimality_blocks") {
        const auto p = catalog::resolve_params(args.example, c.params);
        if (p.at("ell") == 2.0 && p.at("r") > 0.0 && p.at("r") < 2.0)
            out["region"] = to_string(region_check(p.at("ell"), p.at("r"), args.alpha, args.beta));
    }
    print(out);
    return probe.verdict == DecayVerdict::inconclusive ? kCheckFailed : 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spectral pollution experiments for Galerkin compressions of self-adjoint operators"};
    app.require_subcommand(1);

    auto* list = app.add_subcommand("list-examples", "Print the operator catalog as JSON");

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run the checks of a JSON configuration");
    run->add_option("config", config_path, "Configuration file")->required();

    std::string map_example;
    std::vector<std::string> map_params;
    std::vector<double> map_shifts;
    std::vector<std::size_t> map_levels{5, 10, 20, 40};
    auto* map = app.add_subcommand("map-check", "Finite-n spectral mapping check");
    map->add_option("--example", map_example, "Catalog entry")->required();
    map->add_option("--param", map_params, "Parameter override name=value");
    map->add_option("--shift", map_shifts, "Shift a below the lower bound (default: lb-1, lb-3)");
    map->add_option("--levels", map_levels, "Levels n")->capture_default_str();

    PerturbArgs pa;
    auto* perturb = app.add_subcommand("perturb-check", "Blockwise compactness probe");
    perturb->add_option("--example", pa.example, "Catalog entry")->capture_default_str();
    perturb->add_option("--param", pa.params, "Parameter override name=value");
    perturb->add_option("--family", pa.family, "K_theorem or L_corollary")
        ->check(CLI::IsMember({"K_theorem", "L_corollary"}))
        ->capture_default_str();
    perturb->add_option("--alpha", pa.alpha)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    perturb->add_option("--beta", pa.beta)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    perturb->add_option("-a,--shift", pa.a, "Shift below both lower bounds")->capture_default_str();
    perturb->add_option("--k-max", pa.k_max)->check(CLI::Range(20, 10000000))->capture_default_str();
    perturb->add_option("--partner", pa.partner, "catalog_partner, rank_one or same")
        ->check(CLI::IsMember({"catalog_partner", "rank_one", "same"}))
        ->capture_default_str();
    perturb->add_option("--index", pa.index, "Basis index of the rank-one partner")->capture_default_str();
    perturb->add_option("--mu", pa.mu, "Weight of the rank-one partner")->capture_default_str();

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    try {
        if (*list) {
            print(cli::list_examples());
            return 0;
        }
        if (*run)
            return run_config(config_path);
        if (*map)
            return map_check(map_example, map_params, map_shifts, map_levels);
        if (*perturb)
            return perturb_check(pa);
    }
    catch (const cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    catch (const InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    catch (const ConditioningError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumericalError;
    }
    catch (const DomainError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumericalError;
    }
    catch (const StructuralError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumericalError;
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumericalError;
    }
    return 0;
}
