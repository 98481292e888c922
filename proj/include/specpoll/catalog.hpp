#pragma once

// Exactly solvable operator / trial-space pairs exhibiting (or avoiding)
// spectral pollution.
//
// Ambient basis convention shared by every entry:
//   e_0   -> 0,   e_n^+ -> 2n - 1,   e_n^- -> 2n      (n >= 1)
// Block n of every operator acts on span{e_n^+, e_n^-}; block 0 is {e_0}
// when the entry uses it.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "block_operator.hpp"
#include "errors.hpp"
#include "galerkin.hpp"
#include "sparse_vector.hpp"
#include "spectral_truth.hpp"

namespace specpoll::catalog
{

inline BasisIndex e0() { return BasisIndex{0}; }
inline BasisIndex e_plus(std::size_t n) { return BasisIndex{2 * n - 1}; }
inline BasisIndex e_minus(std::size_t n) { return BasisIndex{2 * n}; }

using Params = std::map<std::string, double>;

struct ParamSpec
{
    std::string name;
    double default_value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool lo_open = true;
    bool hi_open = true;
    bool integer = false;
    std::string description;

    [[nodiscard]] bool admits(double x) const
    {
        if (integer && x != std::round(x))
            return false;
        const bool above = lo_open ? x > lo : x >= lo;
        const bool below = hi_open ? x < hi : x <= hi;
        return above && below;
    }
};

/// Limit sets the entry is known to produce.
struct ExpectedLimits
{
    /// Limiting essential spectrum (finite for every entry).
    std::vector<double> essential;
    /// Limiting discrete spectrum inside a window.
    std::function<std::vector<double>(double, double)> discrete;
    /// Limit points that are not in the spectrum of the operator.
    std::vector<double> pollution;

    [[nodiscard]] std::vector<double> essential_in(double lo, double hi) const { return clip(essential, lo, hi); }
    [[nodiscard]] std::vector<double> discrete_in(double lo, double hi) const
    {
        return discrete ? clip(discrete(lo, hi), lo, hi) : std::vector<double>{};
    }
    [[nodiscard]] std::vector<double> pollution_in(double lo, double hi) const { return clip(pollution, lo, hi); }
    [[nodiscard]] std::vector<double> limit_set_in(double lo, double hi) const
    {
        auto out = essential_in(lo, hi);
        auto d = discrete_in(lo, hi);
        out.insert(out.end(), d.begin(), d.end());
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

  private:
    static std::vector<double> clip(std::vector<double> v, double lo, double hi)
    {
        std::erase_if(v, [&](double x) { return !(x > lo && x < hi); });
        std::sort(v.begin(), v.end());
        return v;
    }
};

struct ExampleBundle
{
    std::string name;
    /// Unset for the non-selfadjoint left shift (see LeftShiftOperator).
    std::optional<BlockOperator> op;
    GalerkinSequence sequence;
    ExpectedLimits expected;
    Params params;
    bool selfadjoint = true;
    /// Second operator of a pair on the same trial spaces (optimality_blocks: B).
    std::optional<BlockOperator> partner;
    std::optional<ExpectedLimits> partner_expected;
};

/// e_j -> e_{j-1}, e_1 -> 0 on indices j >= 1.
struct LeftShiftOperator
{
    [[nodiscard]] SparseVector apply(const SparseVector& v) const
    {
        std::vector<SparseEntry> out;
        for (const auto& e : v.entries()) {
            if (e.index.id == 0)
                throw StructuralError("left_shift: index 0 is not part of the ambient basis");
            if (e.index.id > 1)
                out.push_back({BasisIndex{e.index.id - 1}, e.value});
        }
        return SparseVector(std::move(out));
    }
};

inline const std::vector<std::string>& example_names()
{
    static const std::vector<std::string> names{
        "proj_rotated",      "semibounded_square", "indefinite_integer", "double_eigenvalue",
        "mapping_impossible", "sign_multiplication", "optimality_blocks", "left_shift",
    };
    return names;
}

inline std::vector<ParamSpec> param_schema(const std::string& name)
{
    constexpr double pi = std::numbers::pi;
    if (name == "proj_rotated")
        return {{"theta", pi / 4, 0.0, pi / 2, true, true, false, "rotation angle of the last trial vector"}};
    if (name == "mapping_impossible")
        return {{"lambda", 0.5, 0.0, 1.0, true, true, false, "planted limit point"}};
    if (name == "sign_multiplication")
        return {{"rotated", 0.0, 0.0, 1.0, false, false, true, "1 plants a pollution point"},
                {"phi", pi / 4, 0.0, pi / 2, true, true, false, "rotation angle of the planted vector"}};
    if (name == "optimality_blocks")
        return {{"ell", 2.0, 0.0, 4.0, true, false, false, "growth exponent of A"},
                {"r", 1.5, 0.0, 4.0, true, false, false, "growth exponent of B"},
                {"alpha", 0.75, 0.0, 1.0, false, true, false, "left exponent of the corollary probe"},
                {"beta", 0.5, 0.0, 1.0, false, true, false, "right exponent of the corollary probe"}};
    if (name == "semibounded_square" || name == "indefinite_integer" || name == "double_eigenvalue" ||
        name == "left_shift")
        return {};
    throw InvalidArgument("unknown example '" + name + "'");
}

/// Fills defaults and validates user parameters against the schema.
inline Params resolve_params(const std::string& name, const Params& given)
{
    const auto schema = param_schema(name);
    Params out;
    for (const auto& spec : schema)
        out[spec.name] = spec.default_value;
    for (const auto& [key, value] : given) {
        auto it = std::find_if(schema.begin(), schema.end(), [&](const ParamSpec& s) { return s.name == key; });
        if (it == schema.end())
            throw InvalidArgument(name + ": unknown parameter '" + key + "'");
        if (!it->admits(value))
            throw InvalidArgument(name + ": parameter '" + key + "' = " + std::to_string(value) + " out of range");
        out[key] = value;
    }
    return out;
}

namespace detail
{

inline std::optional<std::size_t> pair_locator(BasisIndex i, bool with_e0)
{
    if (i.id == 0)
        return with_e0 ? std::optional<std::size_t>{0} : std::nullopt;
    return (i.id + 1) / 2;
}

inline SymBlock pair_block(std::size_t n, Eigen::Matrix2d m)
{
    return SymBlock{{e_plus(n), e_minus(n)}, Eigen::MatrixXd(m)};
}

/// Block top |f><f| + bottom |g><g| with f = (cos 1/n, sin 1/n), g = (sin 1/n, -cos 1/n).
inline Eigen::Matrix2d rotated_pair(std::size_t n, double top, double bottom)
{
    const double t = 1.0 / static_cast<double>(n);
    const Eigen::Vector2d f(std::cos(t), std::sin(t));
    const Eigen::Vector2d g(std::sin(t), -std::cos(t));
    Eigen::Matrix2d m = top * (f * f.transpose()) + bottom * (g * g.transpose());
    m(1, 0) = m(0, 1);
    return m;
}

/// rotated_pair as a block on (e_n^+, e_n^-) that carries its exact eigenpairs.
inline SymBlock rotated_pair_block(std::size_t n, double top, double bottom)
{
    const double t = 1.0 / static_cast<double>(n);
    Eigen::Matrix2d v;
    v.col(0) << std::cos(t), std::sin(t);
    v.col(1) << std::sin(t), -std::cos(t);
    Eigen::Vector2d values(top, bottom);
    if (bottom < top) {
        v.col(0).swap(v.col(1));
        std::swap(values(0), values(1));
    }
    SymBlock b = pair_block(n, rotated_pair(n, top, bottom));
    b.eigensystem.emplace(Eigen::VectorXd(values), Eigen::MatrixXd(v));
    return b;
}

/// L_n = span{e_k^+, e_k^- : k < n} plus the given last vectors.
inline GalerkinSequence pair_sequence(std::string name, std::function<std::vector<SparseVector>(std::size_t)> last,
                                      std::size_t first_level = 1)
{
    GalerkinSequence seq;
    seq.name = std::move(name);
    seq.regularity = RegularityClass::operator_regular;
    seq.first_level = first_level;
    seq.span_gen = [last = std::move(last)](std::size_t n) {
        std::vector<SparseVector> out;
        out.reserve(2 * n);
        for (std::size_t k = 1; k < n; ++k) {
            out.push_back(SparseVector::unit(e_plus(k)));
            out.push_back(SparseVector::unit(e_minus(k)));
        }
        for (auto& v : last(n))
            out.push_back(std::move(v));
        return out;
    };
    return seq;
}

inline SparseVector rotated_last(std::size_t n, double angle)
{
    return SparseVector{{e_plus(n), std::cos(angle)}, {e_minus(n), std::sin(angle)}};
}

/// Values k^p for k >= from inside (lo, hi).
inline std::vector<Eigenvalue> powers_in(double p, std::size_t from, double lo, double hi, double sign = 1.0)
{
    std::vector<Eigenvalue> out;
    for (std::size_t k = from;; ++k) {
        const double v = std::pow(static_cast<double>(k), p);
        if (v >= std::max(std::abs(lo), std::abs(hi)) + 1.0 || k > 100000000)
            break;
        const double x = sign * v;
        if (x > lo && x < hi)
            out.push_back({x, 1});
    }
    return out;
}

inline std::vector<double> values_of(const std::vector<Eigenvalue>& v)
{
    std::vector<double> out;
    for (const auto& e : v)
        out.push_back(e.value);
    return out;
}

/// sqrt((1 +- eps) / (2 (1 -+ eps))) with the sign of `plus`.
inline double double_eigenvalue_alpha(std::size_t n, bool plus)
{
    const double eps = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    return plus ? std::sqrt((1.0 + eps) / (2.0 * (1.0 - eps))) : -std::sqrt((1.0 - eps) / (2.0 * (1.0 + eps)));
}

} // namespace detail

/// Angle of the last trial vector of mapping_impossible.
inline double mapping_impossible_angle(double lambda, std::size_t n)
{
    return std::numbers::pi / 4 - lambda / (2.0 * static_cast<double>(n));
}

/// The vectors f_n^+ (plus = true) and f_n^- of double_eigenvalue, n >= 2.
inline SparseVector double_eigenvalue_vector(std::size_t n, bool plus)
{
    if (n < 2)
        throw InvalidArgument("double_eigenvalue: trial vectors need n >= 2");
    const double ap = detail::double_eigenvalue_alpha(n, true);
    const double am = detail::double_eigenvalue_alpha(n, false);
    const double first = plus ? ap : am;
    const double second = plus ? am : ap;
    const double norm = std::sqrt(1.0 + first * first + second * second);
    return SparseVector{{e0(), 1.0 / norm}, {e_plus(n), first / norm}, {e_minus(n), -second / norm}};
}

namespace detail
{

inline ExampleBundle make_proj_rotated(const Params& p)
{
    const double theta = p.at("theta");
    const double c2 = std::cos(theta) * std::cos(theta);
    ExampleBundle b;
    b.op = BlockOperator(
        "proj_rotated", [](std::size_t n) { return pair_block(n, Eigen::Vector2d(1.0, 0.0).asDiagonal()); },
        [](BasisIndex i) { return pair_locator(i, false); }, 0.0,
        SpectralTruth({0.0, 1.0}, [](double, double) { return std::vector<Eigenvalue>{}; }), 1);
    b.sequence = pair_sequence("proj_rotated", [theta](std::size_t n) {
        return std::vector<SparseVector>{rotated_last(n, theta)};
    });
    b.expected.essential = {0.0, c2, 1.0};
    b.expected.pollution = {c2};
    return b;
}

inline ExampleBundle make_semibounded_square()
{
    ExampleBundle b;
    auto disc = [](double lo, double hi) { return powers_in(2.0, 1, lo, hi); };
    b.op = BlockOperator(
        "semibounded_square",
        [](std::size_t n) {
            const double n2 = static_cast<double>(n) * static_cast<double>(n);
            return rotated_pair_block(n, n2, -1.0);
        },
        [](BasisIndex i) { return pair_locator(i, false); }, -1.0, SpectralTruth({-1.0}, disc, true), 1);
    b.sequence = pair_sequence("semibounded_square", [](std::size_t n) {
        return std::vector<SparseVector>{SparseVector::unit(e_minus(n))};
    });
    b.expected.essential = {-1.0, 0.0};
    b.expected.discrete = [disc](double lo, double hi) { return values_of(disc(lo, hi)); };
    b.expected.pollution = {0.0};
    return b;
}

inline std::vector<Eigenvalue> plus_minus_integers(double lo, double hi)
{
    auto out = powers_in(1.0, 1, lo, hi);
    auto neg = powers_in(1.0, 1, lo, hi, -1.0);
    out.insert(out.end(), neg.begin(), neg.end());
    return out;
}

inline ExampleBundle make_indefinite_integer()
{
    ExampleBundle b;
    b.op = BlockOperator(
        "indefinite_integer",
        [](std::size_t n) {
            const double v = static_cast<double>(n);
            Eigen::Matrix2d m;
            m << 0.0, v, v, 0.0;
            return pair_block(n, m);
        },
        [](BasisIndex i) { return pair_locator(i, false); }, std::nullopt,
        SpectralTruth({}, plus_minus_integers, true, true), 1);
    b.sequence = pair_sequence("indefinite_integer", [](std::size_t n) {
        return std::vector<SparseVector>{SparseVector::unit(e_minus(n))};
    });
    b.expected.essential = {0.0};
    b.expected.discrete = [](double lo, double hi) { return values_of(plus_minus_integers(lo, hi)); };
    b.expected.pollution = {0.0};
    return b;
}

inline ExampleBundle make_double_eigenvalue()
{
    ExampleBundle b;
    b.op = BlockOperator(
        "double_eigenvalue",
        [](std::size_t n) {
            if (n == 0)
                return SymBlock{{e0()}, Eigen::MatrixXd::Zero(1, 1)};
            return pair_block(n, Eigen::Vector2d(1.0, -1.0).asDiagonal());
        },
        [](BasisIndex i) { return pair_locator(i, true); }, -1.0,
        SpectralTruth({-1.0, 1.0},
                      [](double lo, double hi) {
                          return (lo < 0.0 && 0.0 < hi) ? std::vector<Eigenvalue>{{0.0, 1}} : std::vector<Eigenvalue>{};
                      }),
        0);
    b.sequence = pair_sequence(
        "double_eigenvalue",
        [](std::size_t n) {
            return std::vector<SparseVector>{double_eigenvalue_vector(n, true), double_eigenvalue_vector(n, false)};
        },
        2);
    b.expected.essential = {-1.0, 0.0, 1.0};
    return b;
}

inline ExampleBundle make_mapping_impossible(const Params& p)
{
    const double lambda = p.at("lambda");
    ExampleBundle b;
    b.op = BlockOperator(
        "mapping_impossible",
        [](std::size_t n) {
            const double v = static_cast<double>(n);
            return pair_block(n, Eigen::Vector2d(v, -v).asDiagonal());
        },
        [](BasisIndex i) { return pair_locator(i, false); }, std::nullopt,
        SpectralTruth({}, plus_minus_integers, true, true), 1);
    b.sequence = pair_sequence("mapping_impossible", [lambda](std::size_t n) {
        return std::vector<SparseVector>{rotated_last(n, mapping_impossible_angle(lambda, n))};
    });
    b.expected.essential = {lambda};
    b.expected.discrete = [](double lo, double hi) { return values_of(plus_minus_integers(lo, hi)); };
    b.expected.pollution = {lambda};
    return b;
}

// Multiplication by sgn(x) on L^2(-pi, pi). e_n^+ (e_n^-) are orthonormal
// step functions supported in (0, pi) (resp. (-pi, 0)), so the operator is
// diagonal with entries +1 / -1. The natural trial spaces take both step
// functions of every level; the rotated variant replaces the last pair by
// one mixed vector cos(phi) e_n^+ + sin(phi) e_n^-.
inline ExampleBundle make_sign_multiplication(const Params& p)
{
    const bool rotated = p.at("rotated") != 0.0;
    const double phi = p.at("phi");
    ExampleBundle b;
    b.op = BlockOperator(
        "sign_multiplication", [](std::size_t n) { return pair_block(n, Eigen::Vector2d(1.0, -1.0).asDiagonal()); },
        [](BasisIndex i) { return pair_locator(i, false); }, -1.0,
        SpectralTruth({-1.0, 1.0}, [](double, double) { return std::vector<Eigenvalue>{}; }), 1);
    b.sequence = pair_sequence("sign_multiplication", [rotated, phi](std::size_t n) {
        if (rotated)
            return std::vector<SparseVector>{rotated_last(n, phi)};
        return std::vector<SparseVector>{SparseVector::unit(e_plus(n)), SparseVector::unit(e_minus(n))};
    });
    b.expected.essential = {-1.0, 1.0};
    if (rotated) {
        b.expected.essential.push_back(std::cos(2.0 * phi));
        b.expected.pollution = {std::cos(2.0 * phi)};
    }
    return b;
}

inline ExampleBundle make_optimality_blocks(const Params& p)
{
    const double ell = p.at("ell");
    const double r = p.at("r");
    ExampleBundle b;
    auto disc_a = [ell](double lo, double hi) { return powers_in(ell, 2, lo, hi); };
    auto disc_b = [r](double lo, double hi) { return powers_in(r, 2, lo, hi); };
    auto loc = [](BasisIndex i) { return pair_locator(i, false); };
    b.op = BlockOperator(
        "optimality_A",
        [ell](std::size_t n) { return rotated_pair_block(n, std::pow(static_cast<double>(n), ell), 1.0); },
        loc, 1.0, SpectralTruth({1.0}, disc_a, true), 1);
    b.partner = BlockOperator(
        "optimality_B",
        [r](std::size_t n) {
            return pair_block(n, Eigen::Vector2d(std::pow(static_cast<double>(n), r), 1.0).asDiagonal());
        },
        loc, 1.0, SpectralTruth({1.0}, disc_b, true), 1);
    b.sequence = pair_sequence("optimality_blocks", [](std::size_t n) {
        return std::vector<SparseVector>{SparseVector::unit(e_minus(n))};
    });
    // last diagonal entry n^ell sin^2(1/n) + cos^2(1/n) tends to 1, 2 or infinity
    b.expected.essential = {1.0};
    if (ell == 2.0) {
        b.expected.essential.push_back(2.0);
        b.expected.pollution = {2.0};
    }
    b.expected.discrete = [disc_a](double lo, double hi) { return values_of(disc_a(lo, hi)); };
    ExpectedLimits partner;
    partner.essential = {1.0};
    partner.discrete = [disc_b](double lo, double hi) { return values_of(disc_b(lo, hi)); };
    b.partner_expected = partner;
    return b;
}

inline ExampleBundle make_left_shift()
{
    ExampleBundle b;
    b.selfadjoint = false;
    b.sequence.name = "left_shift";
    b.sequence.regularity = RegularityClass::unknown;
    b.sequence.span_gen = [](std::size_t k) {
        std::vector<SparseVector> out;
        for (std::size_t i = 1; i <= k; ++i)
            out.push_back(SparseVector::unit(BasisIndex{i}));
        return out;
    };
    b.expected.discrete = [](double lo, double hi) {
        return (lo < 0.0 && 0.0 < hi) ? std::vector<double>{0.0} : std::vector<double>{};
    };
    return b;
}

} // namespace detail

/// Builds a catalog entry. Unknown names and out-of-range parameters throw.
inline ExampleBundle get_example(const std::string& name, const Params& given = {})
{
    const Params p = resolve_params(name, given);
    ExampleBundle b;
    if (name == "proj_rotated")
        b = detail::make_proj_rotated(p);
    else if (name == "semibounded_square")
        b = detail::make_semibounded_square();
    else if (name == "indefinite_integer")
        b = detail::make_indefinite_integer();
    else if (name == "double_eigenvalue")
        b = detail::make_double_eigenvalue();
    else if (name == "mapping_impossible")
        b = detail::make_mapping_impossible(p);
    else if (name == "sign_multiplication")
        b = detail::make_sign_multiplication(p);
    else if (name == "optimality_blocks")
        b = detail::make_optimality_blocks(p);
    else
        b = detail::make_left_shift();
    b.name = name;
    b.params = p;
    return b;
}

/// Analytic spectrum of the compression at level n, sorted, with multiplicities.
inline std::vector<Eigenvalue> closed_form_compression_spectrum(const std::string& name, const Params& given,
                                                                std::size_t n)
{
    const Params p = resolve_params(name, given);
    if (n < 1)
        throw InvalidArgument(name + ": level must be at least 1");
    const auto m = n - 1;
    const double nd = static_cast<double>(n);
    std::vector<Eigenvalue> v;
    auto add = [&](double x, std::size_t mult) {
        if (mult > 0)
            v.push_back({x, mult});
    };
    if (name == "proj_rotated") {
        const double c = std::cos(p.at("theta"));
        add(0.0, m);
        add(c * c, 1);
        add(1.0, m);
    }
    else if (name == "semibounded_square") {
        add(-1.0, m);
        add(nd * nd * std::sin(1.0 / nd) * std::sin(1.0 / nd) - std::cos(1.0 / nd) * std::cos(1.0 / nd), 1);
        for (std::size_t k = 1; k < n; ++k)
            add(static_cast<double>(k * k), 1);
    }
    else if (name == "indefinite_integer" || name == "mapping_impossible") {
        for (std::size_t k = 1; k < n; ++k) {
            add(static_cast<double>(k), 1);
            add(-static_cast<double>(k), 1);
        }
        add(name == "indefinite_integer" ? 0.0 : nd * std::sin(p.at("lambda") / nd), 1);
    }
    else if (name == "double_eigenvalue") {
        if (n < 2)
            throw InvalidArgument("double_eigenvalue: level must be at least 2");
        add(-1.0, m);
        add(-1.0 / (nd * nd), 1);
        add(1.0 / (nd * nd), 1);
        add(1.0, m);
    }
    else if (name == "sign_multiplication") {
        if (p.at("rotated") != 0.0) {
            add(-1.0, m);
            add(std::cos(2.0 * p.at("phi")), 1);
            add(1.0, m);
        }
        else {
            add(-1.0, n);
            add(1.0, n);
        }
    }
    else if (name == "optimality_blocks") {
        const double ell = p.at("ell");
        add(1.0, m);
        for (std::size_t k = 1; k < n; ++k)
            add(std::pow(static_cast<double>(k), ell), 1);
        const double s = std::sin(1.0 / nd);
        const double c = std::cos(1.0 / nd);
        add(std::pow(nd, ell) * s * s + c * c, 1);
    }
    else if (name == "left_shift") {
        add(0.0, n);
    }
    else {
        throw InvalidArgument("unknown example '" + name + "'");
    }
    std::sort(v.begin(), v.end(), [](const Eigenvalue& a, const Eigenvalue& b) { return a.value < b.value; });
    std::vector<Eigenvalue> merged;
    for (const auto& e : v) {
        if (!merged.empty() && merged.back().value == e.value)
            merged.back().multiplicity += e.multiplicity;
        else
            merged.push_back(e);
    }
    return merged;
}

/// Analytic spectrum of B_n for the optimality_blocks partner.
inline std::vector<Eigenvalue> optimality_partner_spectrum(const Params& given, std::size_t n)
{
    const Params p = resolve_params("optimality_blocks", given);
    std::vector<double> flat(n, 1.0);
    for (std::size_t k = 2; k < n; ++k)
        flat.push_back(std::pow(static_cast<double>(k), p.at("r")));
    std::sort(flat.begin(), flat.end());
    std::vector<Eigenvalue> out;
    for (double x : flat) {
        if (!out.empty() && out.back().value == x)
            ++out.back().multiplicity;
        else
            out.push_back({x, 1});
    }
    return out;
}

/// Expands (value, multiplicity) pairs into a flat sorted list.
inline std::vector<double> expand(const std::vector<Eigenvalue>& values)
{
    std::vector<double> out;
    for (const auto& e : values)
        out.insert(out.end(), e.multiplicity, e.value);
    return out;
}

/// The 2x2 block L_n of A^-alpha (A - B) B^-beta for optimality_blocks, as printed.
inline Eigen::Matrix2d optimality_L_closed_form(std::size_t n, double ell, double r, double alpha, double beta)
{
    const double nd = static_cast<double>(n);
    const double c = std::cos(1.0 / nd);
    const double s = std::sin(1.0 / nd);
    auto pw = [nd](double e) { return std::pow(nd, e); };
    Eigen::Matrix2d l;
    l(0, 0) = -pw(-beta * r - alpha * ell + r) * c * c + pw(-beta * r) * s * s - pw(-r * (beta - 1.0)) * s * s +
              pw(-beta * r - alpha * ell + ell) * c * c;
    l(0, 1) = c * s * (pw(-ell * (alpha - 1.0)) - pw(-alpha * ell));
    l(1, 0) = c * s * (pw(-beta * r - alpha * ell + ell) - pw(-beta * r - alpha * ell + r) - pw(-beta * r) +
                       pw(-r * (beta - 1.0)));
    l(1, 1) = s * s * (pw(-ell * (alpha - 1.0)) - pw(-alpha * ell));
    return l;
}

/// Jordan block: compression of the left shift to span{e_1, ..., e_k}.
inline Eigen::MatrixXd left_shift_compression(std::size_t k)
{
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i + 1 < static_cast<Eigen::Index>(k); ++i)
        m(i, i + 1) = 1.0;
    return m;
}

/// Exact spectrum of a triangular compression: its diagonal. Throws if the
/// matrix is not upper triangular.
inline std::vector<double> triangular_spectrum(const Eigen::MatrixXd& m)
{
    if (!m.triangularView<Eigen::StrictlyLower>().toDenseMatrix().isZero(0.0))
        throw InvalidArgument("triangular_spectrum: matrix is not upper triangular");
    std::vector<double> out(m.diagonal().data(), m.diagonal().data() + m.rows());
    std::sort(out.begin(), out.end());
    return out;
}

struct LeftShiftResidual
{
    double analytic = 0.0;
    double numeric = 0.0;
};

/// ||A x_k - lambda x_k|| for the normalised geometric vector x_k in L_k.
inline LeftShiftResidual left_shift_residual(double lambda, std::size_t k)
{
    if (!(std::abs(lambda) < 1.0))
        throw InvalidArgument("left_shift_residual: |lambda| must be < 1");
    if (k < 1)
        throw InvalidArgument("left_shift_residual: k must be >= 1");
    const double l2 = lambda * lambda;
    const double norm = std::sqrt((1.0 - l2) / (1.0 - std::pow(l2, static_cast<double>(k))));
    LeftShiftResidual out;
    out.analytic = norm * std::pow(std::abs(lambda), static_cast<double>(k));

    std::vector<SparseEntry> entries;
    for (std::size_t i = 1; i <= k; ++i)
        entries.push_back({BasisIndex{i}, norm * std::pow(lambda, static_cast<double>(i - 1))});
    const SparseVector x(std::move(entries));
    SparseVector residual = LeftShiftOperator{}.apply(x);
    residual.axpy(-lambda, x);
    out.numeric = residual.norm();
    return out;
}

} // namespace specpoll::catalog
