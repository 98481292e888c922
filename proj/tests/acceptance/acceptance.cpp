// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed
// here and must not be loosened to make a line pass.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "specpoll/catalog.hpp"
#include "specpoll/galerkin.hpp"
#include "specpoll/limitspec.hpp"
#include "specpoll/mapping.hpp"
#include "specpoll/perturb.hpp"

using namespace specpoll;

namespace
{

namespace tol
{
constexpr double closed_form = 1e-10;
constexpr double center = 1e-3;
constexpr double weak_null = 1e-8;
constexpr double overlap = 1e-3;
constexpr double mapping = 1e-9;
constexpr double mapping_seconds = 60.0;
constexpr double failure_numeric = 1e-6;
constexpr double failure_distance = 1.0;
constexpr double l_entries = 1e-12;
constexpr double stability = 1e-3;
constexpr double left_shift = 1e-12;
} // namespace tol

/// Collects the first few failure messages of one criterion.
struct Outcome
{
    bool ok = true;
    std::ostringstream detail;
    int notes = 0;

    void fail(const std::string& why)
    {
        ok = false;
        if (notes++ < 4)
            detail << (notes > 1 ? "; " : "") << why;
    }
    void require(bool cond, const std::string& why)
    {
        if (!cond)
            fail(why);
    }
};

int failures = 0;

void criterion(int id, const std::string& title, const std::function<void(Outcome&)>& body)
{
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(out);
    }
    catch (const std::exception& e) {
        out.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s [%d] %s (%.1f s)%s%s\n", out.ok ? "PASS" : "FAIL", id, title.c_str(), secs,
                out.detail.str().empty() ? "" : ": ", out.detail.str().c_str());
    std::fflush(stdout);
    if (!out.ok)
        ++failures;
}

std::string fmt(double x)
{
    std::ostringstream s;
    s.precision(6);
    s << x;
    return s.str();
}

std::vector<std::size_t> range(std::size_t lo, std::size_t hi, std::size_t step = 1)
{
    std::vector<std::size_t> v;
    for (std::size_t n = lo; n <= hi; n += step)
        v.push_back(n);
    return v;
}

double max_abs(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

/// Every expected point has a cluster center within `eps`, and vice versa.
void require_centers(Outcome& out, const std::string& what, const std::vector<double>& centers,
                     const std::vector<double>& expected, double eps)
{
    if (centers.empty() || expected.empty()) {
        out.require(centers.empty() && expected.empty(), what + ": empty center set");
        return;
    }
    const double d = hausdorff(centers, expected);
    out.require(d <= eps, what + ": Hausdorff distance " + fmt(d));
}

// ---------------------------------------------------------------------------

void exact_compression_spectra(Outcome& out)
{
    for (const auto& name : catalog::example_names()) {
        const auto ex = catalog::get_example(name);
        if (!ex.op)
            continue;
        const auto levels = range(std::max<std::size_t>(2, ex.sequence.first_level), 200);
        const auto worst = parallel_map(levels.size(), [&](std::size_t i) {
            const auto got = compress(*ex.op, ex.sequence, levels[i], {false}).eigenvalues;
            const auto want = catalog::expand(catalog::closed_form_compression_spectrum(name, {}, levels[i]));
            if (got.size() != want.size())
                return std::numeric_limits<double>::infinity();
            double d = 0.0;
            for (std::size_t j = 0; j < got.size(); ++j)
                d = std::max(d, std::abs(got[j] - want[j]));
            return d;
        });
        for (std::size_t i = 0; i < levels.size(); ++i)
            out.require(worst[i] <= tol::closed_form,
                        name + " n=" + std::to_string(levels[i]) + ": deviation " + fmt(worst[i]));
    }
    // -1 with multiplicity n - 1 in semibounded_square
    const auto s = catalog::closed_form_compression_spectrum("semibounded_square", {}, 50);
    out.require(s.front().value == -1.0 && s.front().multiplicity == 49, "semibounded_square: multiplicity of -1");
}

const std::vector<std::size_t> kSchedule400{100, 200, 300, 400};

void limit_set_recovery(Outcome& out)
{
    const double theta = std::numbers::pi / 3;
    const double c2 = std::cos(theta) * std::cos(theta);
    {
        const auto ex = catalog::get_example("proj_rotated", {{"theta", theta}});
        const auto est = estimate_limit_set(*ex.op, ex.sequence, {-0.5, 1.5}, kSchedule400);
        require_centers(out, "proj_rotated", est.centers(), {0.0, c2, 1.0}, tol::center);
    }
    {
        const auto ex = catalog::get_example("indefinite_integer");
        const auto est = estimate_limit_set(*ex.op, ex.sequence, {-5.5, 5.5}, kSchedule400);
        std::vector<double> integers;
        for (int k = -5; k <= 5; ++k)
            integers.push_back(k);
        require_centers(out, "indefinite_integer", est.centers(), integers, tol::center);
    }
    {
        const auto ex = catalog::get_example("semibounded_square");
        const auto est = estimate_limit_set(*ex.op, ex.sequence, {-1.5, 30.5}, kSchedule400);
        require_centers(out, "semibounded_square", est.centers(), {-1.0, 0.0, 1.0, 4.0, 9.0, 16.0, 25.0},
                        tol::center);
    }
}

void classification(Outcome& out)
{
    {
        const double theta = std::numbers::pi / 3;
        const double c2 = std::cos(theta) * std::cos(theta);
        const auto ex = catalog::get_example("proj_rotated", {{"theta", theta}});
        auto est = estimate_limit_set(*ex.op, ex.sequence, {-0.5, 1.5}, std::vector<std::size_t>{20, 40, 60, 80});
        classify_all(est, ex.op->truth());
        const Cluster* c = est.nearest(c2);
        out.require(c && std::abs(c->center - c2) <= tol::center, "proj_rotated: no cos^2 theta cluster");
        if (c) {
            out.require(c->label == ClusterLabel::pollution,
                        std::string("proj_rotated cos^2 theta labeled ") + to_string(c->label));
            std::size_t scored = 0;
            for (std::size_t J : c->diagnostics.window_dims)
                for (std::size_t l = 0; l < est.levels.size(); ++l) {
                    if (est.levels[l].n <= J || c->size_at(l) == 0)
                        continue;
                    ++scored;
                    const double s = window_sigma_min(cluster_columns(est, *c, l), J);
                    out.require(s < tol::weak_null, "proj_rotated weak-null score " + fmt(s) + " at J=" +
                                                        std::to_string(J));
                }
            out.require(scored > 0, "proj_rotated: no level with n > J");
        }
    }
    {
        const auto ex = catalog::get_example("semibounded_square");
        auto est = estimate_limit_set(*ex.op, ex.sequence, {-1.5, 10.0}, std::vector<std::size_t>{20, 40, 60, 80});
        classify_all(est, ex.op->truth());
        for (double v : {1.0, 4.0, 9.0}) {
            const Cluster* c = est.nearest(v);
            out.require(c && std::abs(c->center - v) <= tol::center && c->label == ClusterLabel::discrete,
                        "semibounded_square: " + fmt(v) + " not labeled discrete");
        }
    }
    {
        const auto ex = catalog::get_example("double_eigenvalue");
        LimitSetOptions opts;
        opts.probe = catalog::e0();
        auto est = estimate_limit_set(*ex.op, ex.sequence, {-0.5, 0.5}, std::vector<std::size_t>{50, 100, 150, 200},
                                      opts);
        classify_all(est, ex.op->truth());
        const Cluster* c = est.nearest(0.0);
        out.require(c && std::abs(c->center) <= tol::center, "double_eigenvalue: no cluster at 0");
        if (c) {
            const auto& d = c->diagnostics;
            out.require(c->label == ClusterLabel::essential,
                        std::string("double_eigenvalue 0 labeled ") + to_string(c->label));
            out.require(d.truth_multiplicity == 1, "double_eigenvalue: truth multiplicity");
            out.require(!d.rank_counts.empty() && d.rank_counts.back() == 2, "double_eigenvalue: rank count at n=200");
            out.require(est.levels.back().n == 200 && !d.e0_overlaps.empty() && d.e0_overlaps.back().size() == 2,
                        "double_eigenvalue: overlaps at n=200 missing");
            if (!d.e0_overlaps.empty())
                for (double o : d.e0_overlaps.back())
                    out.require(std::abs(o - 1.0 / std::sqrt(2.0)) <= tol::overlap,
                                "double_eigenvalue: |<e0, y>| = " + fmt(o));
        }
    }
}

void mapping_exactness(Outcome& out)
{
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::size_t runs = 0;
    for (const auto& name : catalog::example_names()) {
        const auto ex = catalog::get_example(name);
        if (!ex.op || !ex.op->semi_bounded())
            continue;
        // every level up to 40, then every tenth level up to 200
        auto levels = range(ex.sequence.first_level, 40);
        for (std::size_t n : range(50, 200, 10))
            levels.push_back(n);
        const auto shifts = default_shifts(*ex.op);
        for (const auto& c : check_mapping_sweep(*ex.op, ex.sequence, shifts, levels)) {
            ++runs;
            worst = std::max(worst, c.max_mismatch);
            out.require(c.max_mismatch <= tol::mapping, name + " a=" + fmt(c.a) + " n=" + std::to_string(c.n) +
                                                            ": mismatch " + fmt(c.max_mismatch));
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.require(secs < tol::mapping_seconds, "runtime " + fmt(secs) + " s");
    out.require(runs > 0, "no semi-bounded entries");
    if (out.ok)
        out.detail << runs << " runs, max mismatch " << fmt(worst);
}

void mapping_failure(Outcome& out)
{
    const double lambda = 0.5;
    auto levels = range(1, 60);
    for (std::size_t n : {100, 200, 500, 1000})
        levels.push_back(n);
    const auto rep = demonstrate_mapping_failure_indefinite(lambda, levels);
    for (std::size_t i = 0; i < rep.levels.size(); ++i) {
        const double n = static_cast<double>(rep.levels[i]);
        const double closed = n * std::sin(lambda / n);
        out.require(std::abs(rep.direct_value[i] - closed) <= tol::failure_numeric,
                    "n=" + std::to_string(rep.levels[i]) + ": eigenvalue off n sin(lambda/n)");
        out.require(std::abs(closed - lambda) <= lambda * lambda * lambda / (6.0 * n * n),
                    "n=" + std::to_string(rep.levels[i]) + ": Taylor bound");
        out.require(rep.direct_error[i] <= rep.taylor_bound[i] + tol::failure_numeric,
                    "n=" + std::to_string(rep.levels[i]) + ": computed error above the bound");
        if (rep.levels[i] >= 2)
            out.require(rep.inverse_distance[i] >= tol::failure_distance,
                        "n=" + std::to_string(rep.levels[i]) + ": resolvent distance " + fmt(rep.inverse_distance[i]));
    }
    out.require(rep.levels.back() == 1000 && rep.direct_error.back() <= tol::failure_numeric, "n=1000 not close");
}

void perturbation(Outcome& out)
{
    for (double r : {1.0, 1.5, 1.8}) {
        const auto ex = catalog::get_example("optimality_blocks", {{"ell", 2.0}, {"r", r}});
        for (double alpha : {0.0, 0.25, 0.6, 0.95})
            for (double beta : {0.0, 0.3, 0.75})
                for (std::size_t k : {2, 3, 7, 50, 1000, 100000}) {
                    const auto got = probe_block(*ex.op, *ex.partner, ProbeFamily::L_corollary, 0.0, alpha, beta, k);
                    const auto want = catalog::optimality_L_closed_form(k, 2.0, r, alpha, beta);
                    for (int i = 0; i < 2; ++i)
                        for (int j = 0; j < 2; ++j)
                            out.require(std::abs(got(i, j) - want(i, j)) <= tol::l_entries * (1.0 + std::abs(want(i, j))),
                                        "L entry mismatch r=" + fmt(r) + " k=" + std::to_string(k));
                }
    }

    const auto scan = region_scan({});
    const auto counter = scan.count(Region::counterexample_region);
    const auto corollary = scan.count(Region::corollary_region);
    out.require(counter > 0 && corollary > 0, "scan misses a region");
    for (const auto& c : scan.cells)
        if (!c.consistent)
            out.fail("cell (" + fmt(c.alpha) + ", " + fmt(c.beta) + ") " + to_string(c.region) + ": pair " +
                     to_string(c.pair_verdict) + " fit " + fmt(c.pair_fit));
    require_centers(out, "pair ess(A)", scan.pair_stability.ess_a, {1.0, 2.0}, tol::center);
    require_centers(out, "pair ess(B)", scan.pair_stability.ess_b, {1.0}, tol::center);
    out.require(!scan.pair_stability.stable(), "pair reported stable");
    out.require(scan.compact_stability.distance < tol::stability,
                "compact distance " + fmt(scan.compact_stability.distance));
    if (out.ok)
        out.detail << counter << " counterexample, " << corollary << " corollary, "
                   << scan.count(Region::neither) << " neither cells";
}

void left_shift(Outcome& out)
{
    double worst = 0.0;
    for (double lambda : {0.0, 0.1, -0.3, 0.5, -0.75, 0.9, 0.99})
        for (std::size_t k : {1, 2, 3, 5, 10, 20, 50, 100, 400}) {
            const auto r = catalog::left_shift_residual(lambda, k);
            worst = std::max(worst, std::abs(r.analytic - r.numeric));
            out.require(std::abs(r.analytic - r.numeric) <= tol::left_shift,
                        "lambda=" + fmt(lambda) + " k=" + std::to_string(k) + ": residual mismatch");
        }
    for (std::size_t k = 1; k <= 200; ++k)
        out.require(max_abs(catalog::triangular_spectrum(catalog::left_shift_compression(k))) == 0.0,
                    "sigma(A_" + std::to_string(k) + ") is not {0}");
    if (out.ok)
        out.detail << "max residual mismatch " << fmt(worst);
}

// ---------------------------------------------------------------------------
// Property suites

SparseVector random_vector(std::mt19937& rng, std::size_t first, std::size_t last)
{
    std::normal_distribution<double> g;
    std::vector<SparseEntry> e;
    for (std::size_t i = first; i <= last; ++i)
        e.push_back({BasisIndex{i}, g(rng)});
    return SparseVector(std::move(e));
}

void properties(Outcome& out)
{
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> uni(-5.0, 5.0);

    for (const auto& name : catalog::example_names()) {
        const auto ex = catalog::get_example(name);
        if (!ex.op)
            continue;
        const std::size_t first = ex.op->first_block() == 0 ? 0 : 1;
        for (int trial = 0; trial < 20; ++trial) {
            const auto x = random_vector(rng, first, 40);
            const auto y = random_vector(rng, first, 40);
            const double lhs = ex.op->apply(x).dot(y);
            const double rhs = x.dot(ex.op->apply(y));
            out.require(std::abs(lhs - rhs) <= 1e-12 * (1.0 + ex.op->apply(x).norm() * y.norm()),
                        name + ": <Ax, y> != <x, Ay>");
        }
        if (ex.op->semi_bounded()) {
            const double a = *ex.op->lower_bound() - 1.5;
            for (int trial = 0; trial < 10; ++trial) {
                const auto x = random_vector(rng, first, 30);
                auto shifted = ex.op->apply(x);
                shifted.axpy(-a, x);
                auto back = ex.op->apply_function(FunctionTag::resolvent(), a, shifted);
                back -= x;
                out.require(back.norm() <= 1e-10 * x.norm(), name + ": (A - a)^-1 (A - a) != I");
                auto root2 = ex.op->apply_function(FunctionTag::sqrt_shift(), a,
                                                   ex.op->apply_function(FunctionTag::sqrt_shift(), a, x));
                root2 -= shifted;
                out.require(root2.norm() <= 1e-9 * (1.0 + shifted.norm()), name + ": sqrt(A - a)^2 != A - a");
                auto inv = ex.op->apply_function(FunctionTag::inv_sqrt_shift(), a,
                                                 ex.op->apply_function(FunctionTag::sqrt_shift(), a, x));
                inv -= x;
                out.require(inv.norm() <= 1e-10 * x.norm(), name + ": inverse square root composition");
            }
        }
    }

    for (int trial = 0; trial < 200; ++trial) {
        auto draw = [&] {
            std::vector<double> v(1 + rng() % 6);
            for (double& x : v)
                x = uni(rng);
            return v;
        };
        const auto A = draw(), B = draw(), C = draw();
        out.require(hausdorff(A, A) == 0.0, "Hausdorff: d(A, A) != 0");
        out.require(hausdorff(A, B) == hausdorff(B, A), "Hausdorff: not symmetric");
        out.require(hausdorff(A, C) <= hausdorff(A, B) + hausdorff(B, C) + 1e-12, "Hausdorff: triangle inequality");
        out.require(hausdorff(A, B) >= 0.0, "Hausdorff: negative");
    }

    std::normal_distribution<double> gauss;
    for (const char* name : {"semibounded_square", "proj_rotated", "double_eigenvalue", "indefinite_integer",
                             "sign_multiplication", "optimality_blocks"}) {
        const auto ex = catalog::get_example(name);
        GalerkinSequence mixed = ex.sequence;
        mixed.span_gen = [&, base = ex.sequence](std::size_t n) {
            auto s = base.span(n);
            std::vector<SparseVector> w;
            for (std::size_t i = 0; i < s.size(); ++i) {
                SparseVector v = s[i];
                for (std::size_t j = i + 1; j < s.size(); ++j)
                    v.axpy(0.3 * gauss(rng), s[j]);
                w.push_back(v);
            }
            return w;
        };
        for (std::size_t n : {4, 12}) {
            const auto a = compress(*ex.op, ex.sequence, n, {false}).eigenvalues;
            const auto b = compress(*ex.op, mixed, n, {false}).eigenvalues;
            out.require(a.size() == b.size(), std::string(name) + ": span mixing changed the dimension");
            for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
                out.require(std::abs(a[i] - b[i]) <= 1e-9 * (1.0 + std::abs(a[i])),
                            std::string(name) + ": span mixing changed the spectrum");
        }
    }

    const std::vector<std::size_t> schedule{20, 40, 60, 80};
    for (const char* name : {"semibounded_square", "proj_rotated", "sign_multiplication", "indefinite_integer"}) {
        const auto ex = catalog::get_example(name);
        for (double mu : {0.3, -0.2}) {
            const auto perturbed = with_rank_one(*ex.op, catalog::e_plus(1), mu);
            auto base = estimate_limit_set(*ex.op, ex.sequence, {-3.5, 3.5}, schedule);
            auto other = estimate_limit_set(perturbed, ex.sequence, {-3.5, 3.5}, schedule);
            classify_all(base, ex.op->truth());
            classify_all(other, perturbed.truth());
            const auto ea = base.centers_with({ClusterLabel::essential, ClusterLabel::pollution});
            const auto eb = other.centers_with({ClusterLabel::essential, ClusterLabel::pollution});
            out.require(!ea.empty() && ea.size() == eb.size() && hausdorff(ea, eb) < tol::stability,
                        std::string(name) + ": rank-one perturbation moved the essential labels");
        }
    }
}

} // namespace

int main()
{
    criterion(1, "exact compression spectra, n = 2..200, 1e-10", exact_compression_spectra);
    criterion(2, "limit sets recovered with schedule up to n = 400, centers within 1e-3", limit_set_recovery);
    criterion(3, "classification: pollution, discrete and rank-test essential clusters", classification);
    criterion(4, "finite-n mapping exactness, semi-bounded entries, n <= 200, two shifts", mapping_exactness);
    criterion(5, "mapping failure for an indefinite operator at lambda = 1/2", mapping_failure);
    criterion(6, "perturbation block formulas and the region-scan dichotomy", perturbation);
    criterion(7, "left shift: residual formula and exact spectrum {0}", left_shift);
    criterion(8, "property suites", properties);
    std::printf("%s: %d of 8 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
