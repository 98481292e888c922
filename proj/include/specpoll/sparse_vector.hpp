#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace specpoll
{

/// Identifier of one vector of the ambient orthonormal basis.
struct BasisIndex
{
    std::size_t id = 0;

    constexpr BasisIndex() = default;
    constexpr explicit BasisIndex(std::size_t value) : id(value) {}

    friend constexpr auto operator<=>(BasisIndex, BasisIndex) = default;
};

struct SparseEntry
{
    BasisIndex index;
    double value = 0.0;

    friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Finite linear combination of ambient basis vectors.
///
/// Entries are kept sorted by index with no explicit zeros, so two vectors
/// compare equal iff they have the same coefficients.
class SparseVector
{
  public:
    SparseVector() = default;

    /// Builds a vector from arbitrary entries: sorts, merges duplicates and
    /// drops exact zeros.
    SparseVector(std::initializer_list<SparseEntry> entries) : SparseVector(std::vector<SparseEntry>(entries)) {}

    explicit SparseVector(std::vector<SparseEntry> entries)
    {
        std::sort(entries.begin(), entries.end(),
                  [](const SparseEntry& a, const SparseEntry& b) { return a.index < b.index; });
        for (const auto& e : entries) {
            if (!entries_.empty() && entries_.back().index == e.index)
                entries_.back().value += e.value;
            else
                entries_.push_back(e);
        }
        prune();
    }

    static SparseVector unit(BasisIndex index, double value = 1.0)
    {
        SparseVector v;
        if (value != 0.0)
            v.entries_.push_back({index, value});
        return v;
    }

    [[nodiscard]] std::span<const SparseEntry> entries() const { return entries_; }
    [[nodiscard]] std::size_t size() const { return entries_.size(); }
    [[nodiscard]] bool empty() const { return entries_.empty(); }

    [[nodiscard]] double operator[](BasisIndex index) const
    {
        auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                                   [](const SparseEntry& e, BasisIndex i) { return e.index < i; });
        return (it != entries_.end() && it->index == index) ? it->value : 0.0;
    }

    [[nodiscard]] double dot(const SparseVector& other) const
    {
        double sum = 0.0;
        auto a = entries_.begin();
        auto b = other.entries_.begin();
        while (a != entries_.end() && b != other.entries_.end()) {
            if (a->index < b->index)
                ++a;
            else if (b->index < a->index)
                ++b;
            else
                sum += (a++)->value * (b++)->value;
        }
        return sum;
    }

    [[nodiscard]] double norm() const
    {
        double sum = 0.0;
        for (const auto& e : entries_)
            sum += e.value * e.value;
        return std::sqrt(sum);
    }

    SparseVector& operator*=(double factor)
    {
        for (auto& e : entries_)
            e.value *= factor;
        prune();
        return *this;
    }

    /// this += factor * other
    SparseVector& axpy(double factor, const SparseVector& other)
    {
        std::vector<SparseEntry> merged;
        merged.reserve(entries_.size() + other.entries_.size());
        auto a = entries_.begin();
        auto b = other.entries_.begin();
        while (a != entries_.end() || b != other.entries_.end()) {
            if (b == other.entries_.end() || (a != entries_.end() && a->index < b->index)) {
                merged.push_back(*a++);
            }
            else if (a == entries_.end() || b->index < a->index) {
                merged.push_back({b->index, factor * b->value});
                ++b;
            }
            else {
                merged.push_back({a->index, a->value + factor * b->value});
                ++a;
                ++b;
            }
        }
        entries_ = std::move(merged);
        prune();
        return *this;
    }

    SparseVector& operator+=(const SparseVector& other) { return axpy(1.0, other); }
    SparseVector& operator-=(const SparseVector& other) { return axpy(-1.0, other); }

    friend SparseVector operator+(SparseVector a, const SparseVector& b) { return a += b; }
    friend SparseVector operator-(SparseVector a, const SparseVector& b) { return a -= b; }
    friend SparseVector operator*(double s, SparseVector v) { return v *= s; }

    friend bool operator==(const SparseVector&, const SparseVector&) = default;

  private:
    void prune()
    {
        std::erase_if(entries_, [](const SparseEntry& e) { return e.value == 0.0; });
    }

    std::vector<SparseEntry> entries_;
};

} // namespace specpoll

template <>
struct std::hash<specpoll::BasisIndex>
{
    std::size_t operator()(specpoll::BasisIndex i) const noexcept { return std::hash<std::size_t>{}(i.id); }
};
