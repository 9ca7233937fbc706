#include "mhr/relations.hpp"

#include <iterator>

namespace mhr {

std::span<const IdPair> Relation::pairs_with_left(Id left) const {
    auto lo = std::lower_bound(elems_.begin(), elems_.end(), left,
                               [](const IdPair& p, Id l) { return p.left < l; });
    auto hi = std::upper_bound(lo, elems_.end(), left,
                               [](Id l, const IdPair& p) { return l < p.left; });
    return {elems_.data() + (lo - elems_.begin()), static_cast<std::size_t>(hi - lo)};
}

namespace {

template <typename S>
S merge_union(const S& a, const S& b) {
    std::vector<typename std::decay_t<decltype(*a.begin())>> out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return S(std::move(out));
}

template <typename S>
S merge_intersection(const S& a, const S& b) {
    std::vector<typename std::decay_t<decltype(*a.begin())>> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return S(std::move(out));
}

template <typename S>
S merge_difference(const S& a, const S& b) {
    std::vector<typename std::decay_t<decltype(*a.begin())>> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return S(std::move(out));
}

} // namespace

IdSet set_union(const IdSet& a, const IdSet& b) { return merge_union(a, b); }
IdSet set_intersection(const IdSet& a, const IdSet& b) { return merge_intersection(a, b); }
IdSet set_difference(const IdSet& a, const IdSet& b) { return merge_difference(a, b); }
Relation set_union(const Relation& a, const Relation& b) { return merge_union(a, b); }
Relation set_intersection(const Relation& a, const Relation& b) { return merge_intersection(a, b); }
Relation set_difference(const Relation& a, const Relation& b) { return merge_difference(a, b); }

Relation cartesian_product(const IdSet& a, const IdSet& b) {
    std::vector<IdPair> out;
    out.reserve(a.size() * b.size());
    for (Id x : a)
        for (Id y : b) out.push_back(IdPair{x, y});
    return Relation(std::move(out));
}

Relation compose(const Relation& r, const Relation& p) {
    std::vector<IdPair> out;
    for (const IdPair& xz : r)
        for (const IdPair& zy : p.pairs_with_left(xz.right)) out.push_back(IdPair{xz.left, zy.right});
    return Relation(std::move(out));
}

Relation inverse(const Relation& r) {
    std::vector<IdPair> out;
    out.reserve(r.size());
    for (const IdPair& xy : r) out.push_back(IdPair{xy.right, xy.left});
    return Relation(std::move(out));
}

Relation domain_restrict(const IdSet& s, const Relation& r) {
    std::vector<IdPair> out;
    for (const IdPair& xy : r)
        if (s.contains(xy.left)) out.push_back(xy);
    return Relation(std::move(out));
}

Relation range_restrict(const Relation& r, const IdSet& s) {
    std::vector<IdPair> out;
    for (const IdPair& xy : r)
        if (s.contains(xy.right)) out.push_back(xy);
    return Relation(std::move(out));
}

IdSet image(const Relation& r, const IdSet& s) {
    std::vector<Id> out;
    for (const IdPair& xy : r)
        if (s.contains(xy.left)) out.push_back(xy.right);
    return IdSet(std::move(out));
}

IdSet dom(const Relation& r) {
    std::vector<Id> out;
    out.reserve(r.size());
    for (const IdPair& xy : r) out.push_back(xy.left);
    return IdSet(std::move(out));
}

IdSet ran(const Relation& r) {
    std::vector<Id> out;
    out.reserve(r.size());
    for (const IdPair& xy : r) out.push_back(xy.right);
    return IdSet(std::move(out));
}

Relation identity(const IdSet& s) {
    std::vector<IdPair> out;
    out.reserve(s.size());
    for (Id x : s) out.push_back(IdPair{x, x});
    return Relation(std::move(out));
}

bool is_partial_function(const Relation& r) {
    // Pairs are unique and sorted, so a repeated left component means two
    // distinct right components.
    for (std::size_t i = 1; i < r.size(); ++i)
        if (r.items()[i].left == r.items()[i - 1].left) return false;
    return true;
}

bool is_total_function(const Relation& r, const IdSet& domain_set) {
    return is_partial_function(r) && dom(r) == domain_set;
}

bool is_bijection(const Relation& r, const IdSet& domain_set, const IdSet& range_set) {
    return is_total_function(r, domain_set) && ran(r) == range_set &&
           is_partial_function(inverse(r));
}

namespace {

// Disjointness shortcut: parts are disjoint iff their sizes add up to the
// size of their (deduplicating) union.
template <typename S>
bool partition_check(const S& whole, std::span<const S* const> parts) {
    S acc;
    std::size_t total = 0;
    for (const S* part : parts) {
        acc = merge_union(acc, *part);
        total += part->size();
    }
    return total == acc.size() && acc == whole;
}

} // namespace

bool is_partition(const IdSet& whole, std::span<const IdSet* const> parts) {
    return partition_check(whole, parts);
}

bool is_partition(const Relation& whole, std::span<const Relation* const> parts) {
    return partition_check(whole, parts);
}

} // namespace mhr
