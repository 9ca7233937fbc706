#pragma once

#include "doctest.h"
#include "mhr/kernel.hpp"

namespace fx {

using namespace mhr;

// p1..p3, op1, m1..m3, r1..r4, sp1..sp2
inline Universe small_universe() { return Universe(3, 1, 3, 4, 2); }

inline const Id p1{IdKind::Person, 0};
inline const Id p2{IdKind::Person, 1};
inline const Id p3{IdKind::Person, 2};
inline const Id op1{IdKind::Person, 3};
inline const Id m1{IdKind::Space, 0};
inline const Id m2{IdKind::Space, 1};
inline const Id m3{IdKind::Space, 2};
inline const Id r1{IdKind::Record, 0};
inline const Id r2{IdKind::Record, 1};
inline const Id r3{IdKind::Record, 2};
inline const Id r4{IdKind::Record, 3};
inline const Id sp1{IdKind::Provider, 0};
inline const Id sp2{IdKind::Provider, 1};

inline ActorRef A(Id person) { return ActorRef::consumer(person); }

inline SystemState fresh() {
    Universe u = small_universe();
    return initial_state(u, u.operator_people());
}

inline SystemState applied(SystemState s, std::initializer_list<Event> events,
                           Mutant mutant = Mutant::None) {
    for (const Event& e : events) {
        ApplyResult r = apply_event(s, e, mutant);
        REQUIRE_MESSAGE(r.applied(), "event ", event_line(e, s.universe), " denied by ",
                        r.rejection->guard, ": ", r.rejection->detail);
        s = std::move(r.state);
    }
    return s;
}

inline void require_clean(const SystemState& s) {
    for (const InvariantViolation& v : check_invariants(s))
        FAIL_CHECK(to_string(v.id), " violated: ", v.witness);
}

} // namespace fx
