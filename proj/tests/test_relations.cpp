#include "mhr/relations.hpp"

#include "doctest.h"
#include "oracles.hpp"

using namespace mhr;

namespace {

Id P(std::uint32_t i) { return Id(IdKind::Person, i); }
Id R(std::uint32_t i) { return Id(IdKind::Record, i); }

const Id a = P(0), b = P(1), c = P(2);
const Id r1 = R(1), r2 = R(2), r3 = R(3);

} // namespace

TEST_CASE("set union, intersection, difference") {
    IdSet s12{r1, r2};
    IdSet s23{r2, r3};
    CHECK(set_union(s12, s23) == IdSet{r1, r2, r3});
    CHECK(set_intersection(s12, s23) == IdSet{r2});
    CHECK(set_difference(s12, s23) == IdSet{r1});
    CHECK(set_difference(s12, IdSet{}) == s12);
    CHECK(set_union(IdSet{}, IdSet{}) == IdSet{});
}

TEST_CASE("cartesian product") {
    CHECK(cartesian_product(IdSet{a}, IdSet{r1, r2}) ==
          Relation{IdPair{a, r1}, IdPair{a, r2}});
    CHECK(cartesian_product(IdSet{}, IdSet{r1}) == Relation{});
}

TEST_CASE("composition") {
    CHECK(compose(Relation{IdPair{a, r1}}, Relation{IdPair{r1, b}}) == Relation{IdPair{a, b}});
    CHECK(compose(Relation{IdPair{a, r1}}, Relation{}) == Relation{});
    // Fan-in collapses to a single pair; cross-checked by pair enumeration.
    Relation fan{IdPair{a, r1}, IdPair{a, r2}};
    Relation join{IdPair{r1, b}, IdPair{r2, b}};
    CHECK(compose(fan, join) == Relation{IdPair{a, b}});
    CHECK(compose(fan, join) == oracle::naive_compose(fan, join));
}

TEST_CASE("inverse, restriction, image, dom, ran") {
    Relation r{IdPair{a, r1}, IdPair{b, r2}};
    CHECK(inverse(r) == Relation{IdPair{r1, a}, IdPair{r2, b}});
    CHECK(domain_restrict(IdSet{a}, r) == Relation{IdPair{a, r1}});
    CHECK(range_restrict(r, IdSet{r2}) == Relation{IdPair{b, r2}});

    Relation multi{IdPair{a, r1}, IdPair{a, r2}, IdPair{b, r3}};
    CHECK(image(multi, IdSet{a}) == IdSet{r1, r2});
    CHECK(image(multi, IdSet{a}) == oracle::naive_image(multi, IdSet{a}));
    CHECK(dom(multi) == IdSet{a, b});
    CHECK(ran(multi) == IdSet{r1, r2, r3});
    CHECK(identity(IdSet{a, b}) == Relation{IdPair{a, a}, IdPair{b, b}});
}

TEST_CASE("function predicates") {
    CHECK(is_bijection(Relation{IdPair{a, r1}, IdPair{b, r2}}, IdSet{a, b}, IdSet{r1, r2}));
    CHECK_FALSE(is_bijection(Relation{IdPair{a, r1}, IdPair{b, r1}}, IdSet{a, b}, IdSet{r1}));
    CHECK_FALSE(is_total_function(Relation{IdPair{a, r1}}, IdSet{a, b}));
    CHECK(is_total_function(Relation{IdPair{a, r1}, IdPair{b, r1}}, IdSet{a, b}));
    CHECK(is_partial_function(Relation{}));
    CHECK_FALSE(is_partial_function(Relation{IdPair{a, r1}, IdPair{a, r2}}));
}

TEST_CASE("partition") {
    IdSet whole{r1, r2, r3};
    IdSet p1{r1}, p2{r2}, p3{r3}, p31{r3, r1}, empty;
    {
        const IdSet* parts[] = {&p1, &p2, &p3};
        CHECK(is_partition(whole, parts));
    }
    {
        const IdSet* parts[] = {&p1, &p2, &p31};
        CHECK_FALSE(is_partition(whole, parts)); // r1 appears twice
    }
    {
        const IdSet* parts[] = {&p1, &p2};
        CHECK_FALSE(is_partition(whole, parts)); // r3 uncovered
    }
    {
        const IdSet* parts[] = {&whole, &empty, &empty};
        CHECK(is_partition(whole, parts)); // empty blocks are fine
    }
    {
        const IdSet* parts[] = {&empty};
        CHECK(is_partition(IdSet{}, parts));
    }
}

TEST_CASE("operands are never mutated") {
    Relation r{IdPair{a, r1}, IdPair{b, r2}};
    Relation p{IdPair{r1, c}};
    IdSet s{a};
    Relation r_copy = r;
    Relation p_copy = p;
    IdSet s_copy = s;
    (void)compose(r, p);
    (void)inverse(r);
    (void)domain_restrict(s, r);
    (void)range_restrict(r, s);
    (void)image(r, s);
    (void)set_union(r, p);
    CHECK(r == r_copy);
    CHECK(p == p_copy);
    CHECK(s == s_copy);
}

TEST_CASE("operator laws against brute-force enumeration") {
    oracle::Gen gen(20240817);
    for (int i = 0; i < 500; ++i) {
        Relation r = gen.relation();
        Relation p = gen.relation();
        IdSet s = gen.set();

        CHECK(dom(inverse(r)) == ran(r));
        CHECK(inverse(compose(r, p)) == compose(inverse(p), inverse(r)));
        CHECK(domain_restrict(s, r).subset_of(r));
        CHECK(image(r, s) == ran(domain_restrict(s, r)));

        CHECK(compose(r, p) == oracle::naive_compose(r, p));
        CHECK(inverse(r) == oracle::naive_inverse(r));
        CHECK(domain_restrict(s, r) == oracle::naive_domain_restrict(s, r));
        CHECK(range_restrict(r, s) == oracle::naive_range_restrict(r, s));
        CHECK(image(r, s) == oracle::naive_image(r, s));
        CHECK(dom(r) == oracle::naive_dom(r));
        CHECK(ran(r) == oracle::naive_ran(r));
    }
}
