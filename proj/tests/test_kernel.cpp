#include "mhr/kernel.hpp"

#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "mhr/checker.hpp"

using namespace mhr;
using namespace fx;

TEST_CASE("guard failure leaves the state untouched") {
    SystemState s = fresh();
    ApplyResult r = apply_event(s, OptOut{p1});
    REQUIRE_FALSE(r.applied());
    CHECK(r.rejection->event == "opt_out");
    CHECK(r.rejection->guard == "grd1");
    CHECK_FALSE(r.rejection->detail.empty());
    CHECK(r.state == s);
    CHECK(hash_state(r.state) == hash_state(s));
}

TEST_CASE("register and opt out") {
    SystemState s = applied(fresh(), {RegisterConsumer{p1, m1}});
    CHECK(s.consumers.contains(p1));
    CHECK(s.mhr_db.contains(m1));
    CHECK(s.my_hr.contains_pair(p1, m1));
    require_clean(s);

    // operators cannot register; taken spaces cannot be reused
    CHECK(apply_event(s, RegisterConsumer{op1, m2}).rejection->guard == "grd2");
    CHECK(apply_event(s, RegisterConsumer{p2, m1}).rejection->guard == "grd3");
    CHECK(apply_event(s, RegisterConsumer{p1, m2}).rejection->guard == "grd1");

    SystemState after = applied(s, {OptOut{p1}});
    CHECK_FALSE(after.consumers.contains(p1));
    CHECK_FALSE(after.mhr_db.contains(m1));
    CHECK(after.my_hr.empty());
    CHECK(after == fresh());
}

TEST_CASE("opt out cascades across records, providers, nominees and reps") {
    SystemState s = applied(fresh(), {
        RegisterConsumer{p1, m1},
        RegisterConsumer{p2, m2},
        RegisterConsumer{p3, m3},
        RegisterServiceProvider{sp1},
        AssignProvider{A(p1), p1, sp1},
        AssignProvider{A(p2), p2, sp1},
        UploadRecord{A(p1), p1, r1, RecordCategory::General},
        UploadRecord{A(p2), p2, r2, RecordCategory::General},
        AddNominatedGeneral{A(p1), p1, p2},
        AddNominatedRestricted{A(p2), p2, p1}, // p1 is nominee elsewhere
        AssignAuthorisedRep{op1, p3, p1},
    });
    require_clean(s);
    SystemState after = applied(applied(s, {RemoveAuthorisedRep{op1, p3, p1}}), {OptOut{p1}});
    require_clean(after);
    CHECK_FALSE(after.records.contains(r1));
    CHECK(after.records.contains(r2));
    CHECK(dom(after.consumer_sp) == IdSet{p2});
    CHECK(after.sp_mhr_access == Relation{IdPair{sp1, m2}});
    CHECK(after.general_nominated.empty());     // p2 was nominee of m1 only
    CHECK(after.restricted_nominated.empty());  // p1 was nominee of m2, gone too
    CHECK(after.restricted_nominated_access.empty());
    CHECK(after.authorised_rep.empty());
    CHECK(after.general_sp_access == Relation{IdPair{sp1, r2}});
}

TEST_CASE("owner under authorised representative may still opt out") {
    SystemState s = applied(fresh(), {
        RegisterConsumer{p1, m1},
        RegisterConsumer{p2, m2},
        AssignAuthorisedRep{op1, p2, p1},
    });
    CHECK(apply_event(s, OptOut{p1}).applied());
}

TEST_CASE("marking round trip restores the original state") {
    SystemState s = applied(fresh(), {
        RegisterConsumer{p1, m1},
        RegisterServiceProvider{sp1},
        AssignProvider{A(p1), p1, sp1},
        UploadRecord{A(p1), p1, r1, RecordCategory::General},
    });
    SystemState round =
        applied(s, {RestrictRecord{A(p1), p1, r1}, GeneralRecord{A(p1), p1, r1}});
    CHECK(round == s);
    CHECK(hash_state(round) == hash_state(s));
}

TEST_CASE("restrict drops general-listed actors from access") {
    SystemState s = applied(fresh(), {
        RegisterConsumer{p1, m1},
        RegisterConsumer{p2, m2},
        RegisterServiceProvider{sp1},
        RegisterServiceProvider{sp2},
        AssignProvider{A(p1), p1, sp1},
        AssignProvider{A(p1), p1, sp2},
        GrantRestrictedSp{A(p1), p1, sp2},
        AddNominatedGeneral{A(p1), p1, p2},
        UploadRecord{A(p1), p1, r1, RecordCategory::General},
    });
    CHECK(s.general_sp_access.contains_pair(sp1, r1));
    CHECK(s.restricted_sp_access.contains_pair(sp2, r1));
    CHECK(s.general_nominated_access.contains_pair(p2, r1));

    s = applied(s, {RestrictRecord{A(p1), p1, r1}});
    require_clean(s);
    CHECK_FALSE(s.general_sp_access.contains_pair(sp1, r1));
    CHECK_FALSE(s.restricted_sp_access.contains_pair(sp1, r1));
    CHECK(s.restricted_sp_access.contains_pair(sp2, r1)); // restricted list keeps it
    CHECK_FALSE(s.general_nominated_access.contains_pair(p2, r1));
    CHECK(s == recompute_derived(s));
}

TEST_CASE("hidden records leave every access relation; unhide restores general") {
    SystemState s = applied(fresh(), {
        RegisterConsumer{p1, m1},
        RegisterConsumer{p2, m2},
        RegisterServiceProvider{sp1},
        AssignProvider{A(p1), p1, sp1},
        GrantRestrictedSp{A(p1), p1, sp1},
        AddNominatedRestricted{A(p1), p1, p2},
        UploadRecord{A(p1), p1, r1, RecordCategory::Restricted},
    });
    s = applied(s, {HideRecord{A(p1), p1, r1}});
    require_clean(s);
    CHECK(s.hidden_records.contains(r1));
    CHECK(s.restricted_sp_access.empty());
    CHECK(s.restricted_nominated_access.empty());
    CHECK(apply_event(s, RestrictRecord{A(p1), p1, r1}).rejection->guard == "grd2");
    CHECK(apply_event(s, HideRecord{A(p1), p1, r1}).rejection->guard == "grd2");
    CHECK(apply_event(s, UnhideRecord{p1, r1}).rejection->guard == "grd1"); // owner cannot unhide

    s = applied(s, {UnhideRecord{op1, r1}});
    require_clean(s);
    CHECK(s.general_records.contains(r1)); // restored to the default category
    CHECK(s.restricted_sp_access.contains_pair(sp1, r1));
    CHECK(s.restricted_nominated_access.contains_pair(p2, r1));
    CHECK(apply_event(s, UnhideRecord{op1, r1}).rejection->guard == "grd2");
}

TEST_CASE("actor control guard") {
    SystemState s = applied(fresh(), {
        RegisterConsumer{p1, m1},
        RegisterConsumer{p2, m2},
    });
    CHECK(actor_controls(s, A(p1), p1));
    CHECK_FALSE(actor_controls(s, A(p2), p1));
    CHECK_FALSE(actor_controls(s, ActorRef::provider(sp1), p1));
    CHECK_FALSE(actor_controls(s, ActorRef::operator_(op1), p1));

    s = applied(s, {AssignAuthorisedRep{op1, p2, p1}});
    CHECK_FALSE(actor_controls(s, A(p1), p1)); // owner locked out
    CHECK(actor_controls(s, A(p2), p1));       // representative acts as owner
    CHECK(actor_controls(s, A(p2), p2));       // rep still controls their own space

    s = applied(s, {RemoveAuthorisedRep{op1, p2, p1}});
    CHECK(actor_controls(s, A(p1), p1));
}

TEST_CASE("every owner-control event honours the control guard") {
    SystemState base = applied(fresh(), {
        RegisterConsumer{p1, m1},
        RegisterConsumer{p2, m2},
        RegisterConsumer{p3, m3},
        RegisterServiceProvider{sp1},
        AssignProvider{A(p1), p1, sp1},
        UploadRecord{A(p1), p1, r1, RecordCategory::General},
        AssignAuthorisedRep{op1, p2, p1},
    });

    auto control_events = [&](ActorRef actor) {
        return std::vector<Event>{
            UploadRecord{actor, p1, r2, RecordCategory::General},
            DeleteRecord{actor, p1, r1},
            RestrictRecord{actor, p1, r1},
            GeneralRecord{actor, p1, r1},
            HideRecord{actor, p1, r1},
            AssignProvider{actor, p1, sp2},
            GrantGeneralSp{actor, p1, sp1},
            GrantRestrictedSp{actor, p1, sp1},
            RevokeAccessSp{actor, p1, sp1},
            AddNominatedGeneral{actor, p1, p3},
            AddNominatedRestricted{actor, p1, p3},
            GrantFullAccessNominated{actor, p1, p3},
            RemoveNominated{actor, p1, p3},
        };
    };

    for (const Event& e : control_events(A(p1))) {
        CAPTURE(event_line(e, base.universe));
        CHECK(is_owner_control_event(e));
        ApplyResult r = apply_event(base, e);
        REQUIRE_FALSE(r.applied()); // the owner lost all control
        CHECK(r.rejection->guard == "grd_ctrl");
    }
    for (const Event& e : control_events(A(p2))) {
        CAPTURE(event_line(e, base.universe));
        ApplyResult r = apply_event(base, e);
        // the representative is never stopped by the control guard
        if (!r.applied()) CHECK(r.rejection->guard != "grd_ctrl");
    }
    // non-control events stay available to their own actors
    CHECK(apply_event(base, ViewRecord{A(p1), r1}).applied());
    CHECK(apply_event(base, UploadGeneralRecordSp{sp1, p1, r3}).applied());
}

TEST_CASE("revoked provider keeps no access to the space") {
    SystemState s = applied(fresh(), {
        RegisterConsumer{p1, m1},
        RegisterServiceProvider{sp1},
        AssignProvider{A(p1), p1, sp1},
        GrantRestrictedSp{A(p1), p1, sp1},
        UploadRecord{A(p1), p1, r1, RecordCategory::General},
        UploadRecord{A(p1), p1, r2, RecordCategory::Restricted},
        RevokeAccessSp{A(p1), p1, sp1},
    });
    require_clean(s);
    CHECK(s.revoked_sp_list.contains_pair(sp1, m1));
    CHECK(set_intersection(image(s.restricted_sp_access, IdSet{sp1}), s.records_of_space(m1))
              .empty());
    CHECK(apply_event(s, UploadGeneralRecordSp{sp1, p1, r3}).rejection->guard == "grd2");
    CHECK(apply_event(s, UploadRestrictedRecordSp{sp1, p1, r3}).rejection->guard == "grd2");
    CHECK(apply_event(s, ViewRecord{ActorRef::provider(sp1), r1}).rejection->guard == "grd2");
}

TEST_CASE("provider uploads carry the forced category") {
    SystemState s = applied(fresh(), {
        RegisterConsumer{p1, m1},
        RegisterServiceProvider{sp1},
        RegisterServiceProvider{sp2},
        AssignProvider{A(p1), p1, sp1},
        AssignProvider{A(p1), p1, sp2},
        GrantRestrictedSp{A(p1), p1, sp2},
        UploadGeneralRecordSp{sp1, p1, r1},
        UploadRestrictedRecordSp{sp2, p1, r2},
    });
    require_clean(s);
    CHECK(s.general_records.contains(r1));
    CHECK(s.restricted_records.contains(r2));
    CHECK(s.consumer_own_records.contains_pair(r1, p1)); // owner is the consumer
    CHECK(apply_event(s, UploadRestrictedRecordSp{sp1, p1, r3}).rejection->guard == "grd2");
    CHECK(apply_event(s, UploadGeneralRecordSp{sp2, p1, r3}).rejection->guard == "grd2");
}

TEST_CASE("full-access nominees upload, others do not") {
    SystemState s = applied(fresh(), {
        RegisterConsumer{p1, m1},
        RegisterConsumer{p2, m2},
        RegisterConsumer{p3, m3},
        GrantFullAccessNominated{A(p1), p1, p2},
        AddNominatedRestricted{A(p1), p1, p3},
    });
    require_clean(s);
    CHECK(s.full_access_nominated.contains_pair(p2, m1));
    CHECK(s.restricted_nominated.contains_pair(p2, m1)); // full access implies restricted
    s = applied(s, {UploadGeneralRecordNominated{p2, p1, r1},
                    UploadRestrictedRecordNominated{p2, p1, r2}});
    require_clean(s);
    CHECK(s.general_records.contains(r1));
    CHECK(s.restricted_records.contains(r2));
    CHECK(s.restricted_nominated_access.contains_pair(p2, r1));
    CHECK(s.restricted_nominated_access.contains_pair(p3, r2));
    CHECK(apply_event(s, UploadGeneralRecordNominated{p3, p1, r3}).rejection->guard == "grd2");

    // self-nomination is stopped by the dedicated guard
    CHECK(apply_event(s, GrantFullAccessNominated{A(p1), p1, p1}).rejection->guard == "grd1_r2");
    CHECK(apply_event(s, AddNominatedGeneral{A(p1), p1, p1}).rejection->guard == "grd2");
}

TEST_CASE("view_record never changes the state") {
    SystemState s = applied(fresh(), {
        RegisterConsumer{p1, m1},
        UploadRecord{A(p1), p1, r1, RecordCategory::General},
    });
    ApplyResult r = apply_event(s, ViewRecord{A(p1), r1});
    CHECK(r.applied());
    CHECK(r.state == s);
}

TEST_CASE("identifiers outside the universe are errors, not denials") {
    SystemState s = fresh();
    CHECK_THROWS_AS(apply_event(s, RegisterConsumer{Id(IdKind::Person, 40), m1}), UnknownIdError);
    CHECK_THROWS_AS(apply_event(s, RegisterConsumer{m1, m1}), UnknownIdError); // wrong namespace
    CHECK_THROWS_AS(apply_event(s, ViewRecord{A(p1), Id(IdKind::Record, 9)}), UnknownIdError);
    CHECK_THROWS_AS(apply_event(s, UploadRecord{A(p1), p1, r1, RecordCategory::Hidden}),
                    std::invalid_argument);
}

TEST_CASE("random traces preserve invariants and match the oracle") {
    Universe u = small_universe();
    SystemState s = initial_state(u, u.operator_people());
    std::mt19937_64 rng(7);
    for (int step = 0; step < 60; ++step) {
        auto enabled = enumerate_enabled(s, u);
        REQUIRE_FALSE(enabled.empty());
        const Event& e = enabled[rng() % enabled.size()];
        ApplyResult r = apply_event(s, e);
        REQUIRE(r.applied());
        require_clean(r.state);
        CHECK(recompute_derived(r.state) == r.state);
        s = std::move(r.state);
    }
}

TEST_CASE("recorded traces replay to the same outcome") {
    Universe u = small_universe();
    Trace trace{initial_state(u, u.operator_people()), {}};
    SystemState s = trace.initial;
    std::mt19937_64 rng(11);
    for (int step = 0; step < 40; ++step) {
        auto enabled = enumerate_enabled(s, u);
        const Event& e = enabled[rng() % enabled.size()];
        ApplyResult r = apply_event(s, e);
        trace.steps.push_back(TraceStep{e, r.rejection});
        s = std::move(r.state);
    }
    // a rejected probe records its guard too
    ApplyResult denied = apply_event(s, RegisterConsumer{op1, m1});
    REQUIRE_FALSE(denied.applied());
    trace.steps.push_back(TraceStep{RegisterConsumer{op1, m1}, denied.rejection});

    SystemState replayed = replay(trace);
    CHECK(replayed == s);
    CHECK(hash_state(replayed) == hash_state(s));

    CHECK(replay(Trace{trace.initial, {}}) == trace.initial);

    Trace tampered = trace;
    tampered.steps.back().rejection = std::nullopt;
    CHECK_THROWS_AS(replay(tampered), ReplayDivergence);
}
