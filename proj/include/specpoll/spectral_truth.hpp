#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace specpoll
{

enum class SpectralKind
{
    essential,
    discrete,
};

struct Eigenvalue
{
    double value = 0.0;
    std::size_t multiplicity = 1;
};

struct SpectralPoint
{
    double value = 0.0;
    SpectralKind kind = SpectralKind::discrete;
    /// Unset for essential points.
    std::optional<std::size_t> multiplicity;
};

/// Declared spectrum of an exactly solvable operator.
///
/// Essential points form a finite set. Discrete eigenvalues are produced on
/// demand for a finite window, which must not contain an accumulation point
/// of infinitely many eigenvalues unless the enumerator applies its own cutoff.
class SpectralTruth
{
  public:
    using DiscreteEnumerator = std::function<std::vector<Eigenvalue>(double lo, double hi)>;

    SpectralTruth(std::vector<double> essential, DiscreteEnumerator discrete, bool unbounded_above = false,
                  bool unbounded_below = false)
        : essential_(std::move(essential)), discrete_(std::move(discrete)), unbounded_above_(unbounded_above),
          unbounded_below_(unbounded_below)
    {
        std::sort(essential_.begin(), essential_.end());
    }

    [[nodiscard]] const std::vector<double>& essential() const { return essential_; }
    [[nodiscard]] bool unbounded_above() const { return unbounded_above_; }
    [[nodiscard]] bool unbounded_below() const { return unbounded_below_; }

    /// Discrete eigenvalues strictly inside (lo, hi), sorted.
    [[nodiscard]] std::vector<Eigenvalue> discrete_in(double lo, double hi) const
    {
        if (!(lo < hi) || !discrete_)
            return {};
        auto values = discrete_(lo, hi);
        std::erase_if(values, [&](const Eigenvalue& e) { return !(e.value > lo && e.value < hi); });
        std::sort(values.begin(), values.end(), [](const Eigenvalue& a, const Eigenvalue& b) { return a.value < b.value; });
        return values;
    }

    [[nodiscard]] bool is_essential(double x, double tol) const
    {
        return std::any_of(essential_.begin(), essential_.end(), [&](double e) { return std::abs(e - x) <= tol; });
    }

    /// Multiplicity of x as a discrete eigenvalue (0 if it is not one);
    /// unset when x is an essential point.
    [[nodiscard]] std::optional<std::size_t> kernel_multiplicity(double x, double tol = 1e-12) const
    {
        if (is_essential(x, tol))
            return std::nullopt;
        std::size_t mult = 0;
        for (const auto& e : discrete_in(x - tol - 1e-300, x + tol + 1e-300))
            mult += e.multiplicity;
        return mult;
    }

    /// Every essential point and discrete eigenvalue inside the open interval.
    [[nodiscard]] std::vector<SpectralPoint> in(double lo, double hi) const
    {
        std::vector<SpectralPoint> out;
        if (!(lo < hi))
            return out;
        for (double e : essential_)
            if (e > lo && e < hi)
                out.push_back({e, SpectralKind::essential, std::nullopt});
        for (const auto& d : discrete_in(lo, hi))
            if (!is_essential(d.value, 0.0))
                out.push_back({d.value, SpectralKind::discrete, d.multiplicity});
        std::sort(out.begin(), out.end(), [](const SpectralPoint& a, const SpectralPoint& b) { return a.value < b.value; });
        return out;
    }

    /// Distance from x to the nearest spectral point within `radius`, or +inf.
    [[nodiscard]] double distance(double x, double radius) const
    {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : in(x - radius, x + radius))
            best = std::min(best, std::abs(p.value - x));
        return best;
    }

  private:
    std::vector<double> essential_;
    DiscreteEnumerator discrete_;
    bool unbounded_above_ = false;
    bool unbounded_below_ = false;
};

} // namespace specpoll
