#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace mhr {

// Identifier namespaces. Every identifier carries its namespace so the four
// carrier sets of a machine can never collide.
enum class IdKind : std::uint8_t { Person = 0, Space = 1, Record = 2, Provider = 3 };

// Opaque totally-ordered identifier. The order (namespace, then index) exists
// only to make serialization and hashing canonical.
class Id {
public:
    constexpr Id() : raw_(0) {}
    constexpr Id(IdKind kind, std::uint32_t index)
        : raw_((static_cast<std::uint32_t>(kind) << 28) | (index & kIndexMask)) {}

    constexpr IdKind kind() const { return static_cast<IdKind>(raw_ >> 28); }
    constexpr std::uint32_t index() const { return raw_ & kIndexMask; }
    constexpr std::uint32_t raw() const { return raw_; }

    static constexpr Id from_raw(std::uint32_t raw) {
        Id id;
        id.raw_ = raw;
        return id;
    }

    friend constexpr auto operator<=>(Id, Id) = default;

private:
    static constexpr std::uint32_t kIndexMask = (1u << 28) - 1;
    std::uint32_t raw_;
};

// An ordered pair, the element type of Relation.
struct IdPair {
    Id left;
    Id right;

    friend constexpr auto operator<=>(const IdPair&, const IdPair&) = default;
};

namespace detail {

// Sorted-unique vector; the common core of IdSet and Relation.
template <typename T>
class FlatSet {
public:
    FlatSet() = default;
    FlatSet(std::initializer_list<T> items) : elems_(items) { normalize(); }
    explicit FlatSet(std::vector<T> items) : elems_(std::move(items)) { normalize(); }

    bool contains(const T& x) const {
        return std::binary_search(elems_.begin(), elems_.end(), x);
    }

    // No-op when already present.
    void insert(const T& x) {
        auto it = std::lower_bound(elems_.begin(), elems_.end(), x);
        if (it == elems_.end() || *it != x) elems_.insert(it, x);
    }

    // No-op when absent.
    void erase(const T& x) {
        auto it = std::lower_bound(elems_.begin(), elems_.end(), x);
        if (it != elems_.end() && *it == x) elems_.erase(it);
    }

    template <typename Pred>
    void erase_if(Pred pred) {
        elems_.erase(std::remove_if(elems_.begin(), elems_.end(), pred), elems_.end());
    }

    bool empty() const { return elems_.empty(); }
    std::size_t size() const { return elems_.size(); }
    auto begin() const { return elems_.begin(); }
    auto end() const { return elems_.end(); }
    std::span<const T> items() const { return elems_; }

    bool subset_of(const FlatSet& other) const {
        return std::includes(other.elems_.begin(), other.elems_.end(),
                             elems_.begin(), elems_.end());
    }

    friend bool operator==(const FlatSet&, const FlatSet&) = default;

protected:
    void normalize() {
        std::sort(elems_.begin(), elems_.end());
        elems_.erase(std::unique(elems_.begin(), elems_.end()), elems_.end());
    }

    std::vector<T> elems_;
};

} // namespace detail

// Finite set of identifiers.
class IdSet : public detail::FlatSet<Id> {
public:
    using FlatSet::FlatSet;
};

// Finite set of ordered pairs. Pairs are kept sorted by (left, right), so
// ranges with a common left component are contiguous.
class Relation : public detail::FlatSet<IdPair> {
public:
    using FlatSet::FlatSet;

    void insert_pair(Id left, Id right) { insert(IdPair{left, right}); }
    void erase_pair(Id left, Id right) { erase(IdPair{left, right}); }
    bool contains_pair(Id left, Id right) const { return contains(IdPair{left, right}); }

    // All pairs whose left component is `left`, as a contiguous span.
    std::span<const IdPair> pairs_with_left(Id left) const;
};

// ---- Set operators ---------------------------------------------------------

IdSet set_union(const IdSet& a, const IdSet& b);
IdSet set_intersection(const IdSet& a, const IdSet& b);
IdSet set_difference(const IdSet& a, const IdSet& b);
Relation set_union(const Relation& a, const Relation& b);
Relation set_intersection(const Relation& a, const Relation& b);
Relation set_difference(const Relation& a, const Relation& b);
Relation cartesian_product(const IdSet& a, const IdSet& b);

// ---- Relational operators --------------------------------------------------

// Forward composition: { x|->y | exists z. x|->z in r and z|->y in p }.
Relation compose(const Relation& r, const Relation& p);
Relation inverse(const Relation& r);
Relation domain_restrict(const IdSet& s, const Relation& r);
Relation range_restrict(const Relation& r, const IdSet& s);
IdSet image(const Relation& r, const IdSet& s);
IdSet dom(const Relation& r);
IdSet ran(const Relation& r);
Relation identity(const IdSet& s);

// ---- Function and partition predicates -------------------------------------

bool is_partial_function(const Relation& r);
bool is_total_function(const Relation& r, const IdSet& domain_set);
bool is_bijection(const Relation& r, const IdSet& domain_set, const IdSet& range_set);

// Pairwise disjoint parts whose union is the whole; empty parts are allowed.
bool is_partition(const IdSet& whole, std::span<const IdSet* const> parts);
bool is_partition(const Relation& whole, std::span<const Relation* const> parts);

} // namespace mhr
