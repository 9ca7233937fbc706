#include "mhr/checker.hpp"

#include <deque>
#include <random>
#include <unordered_map>

#include "json.hpp"

namespace mhr {

namespace {

constexpr std::size_t kMaxCounterexamples = 25;

std::uint64_t hash_bytes(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<InvariantViolation> check_selected(const SystemState& s,
                                               const std::vector<InvariantId>& selection) {
    std::vector<InvariantViolation> all = check_invariants(s);
    if (selection.empty()) return all;
    std::vector<InvariantViolation> filtered;
    for (InvariantViolation& v : all)
        for (InvariantId id : selection)
            if (v.id == id) {
                filtered.push_back(std::move(v));
                break;
            }
    return filtered;
}

} // namespace

std::vector<Event> enumerate_enabled(const SystemState& s, const Universe& u, Mutant mutant) {
    std::vector<Event> out;
    auto try_event = [&](Event e) {
        if (!first_failing_guard(s, e, mutant)) out.push_back(std::move(e));
    };

    const IdSet people = u.people();
    const IdSet spaces = u.spaces();
    const IdSet records = u.records();
    const IdSet providers = u.providers();
    constexpr RecordCategory kCats[] = {RecordCategory::General, RecordCategory::Restricted};

    for (Id p : people)
        for (Id m : spaces) try_event(RegisterConsumer{p, m});
    for (Id p : people) try_event(OptOut{p});
    for (Id a : people) {
        ActorRef actor = ActorRef::consumer(a);
        for (Id c : people) {
            for (Id r : records) {
                for (RecordCategory cat : kCats) try_event(UploadRecord{actor, c, r, cat});
                try_event(DeleteRecord{actor, c, r});
                try_event(RestrictRecord{actor, c, r});
                try_event(GeneralRecord{actor, c, r});
                try_event(HideRecord{actor, c, r});
            }
            for (Id sp : providers) {
                try_event(AssignProvider{actor, c, sp});
                try_event(GrantGeneralSp{actor, c, sp});
                try_event(GrantRestrictedSp{actor, c, sp});
                try_event(RevokeAccessSp{actor, c, sp});
            }
            for (Id n : people) {
                try_event(AddNominatedGeneral{actor, c, n});
                try_event(AddNominatedRestricted{actor, c, n});
                try_event(GrantFullAccessNominated{actor, c, n});
                try_event(RemoveNominated{actor, c, n});
            }
        }
    }
    for (Id op : people)
        for (Id r : records) try_event(UnhideRecord{op, r});
    for (Id r : records) {
        for (Id p : people) try_event(ViewRecord{ActorRef::consumer(p), r});
        for (Id sp : providers) try_event(ViewRecord{ActorRef::provider(sp), r});
    }
    for (Id sp : providers) {
        try_event(RegisterServiceProvider{sp});
        for (Id c : people)
            for (Id r : records) {
                try_event(UploadGeneralRecordSp{sp, c, r});
                try_event(UploadRestrictedRecordSp{sp, c, r});
            }
    }
    for (Id n : people)
        for (Id c : people)
            for (Id r : records) {
                try_event(UploadGeneralRecordNominated{n, c, r});
                try_event(UploadRestrictedRecordNominated{n, c, r});
            }
    for (Id op : people)
        for (Id a : people)
            for (Id c : people) {
                try_event(AssignAuthorisedRep{op, a, c});
                try_event(RemoveAuthorisedRep{op, a, c});
            }

    std::sort(out.begin(), out.end(), event_less);
    return out;
}

CheckerReport explore(const CheckerConfig& cfg) {
    const auto started = std::chrono::steady_clock::now();
    const Universe u = cfg.universe();
    const SystemState init = initial_state(u, u.operator_people());

    struct Node {
        std::vector<std::uint8_t> bytes;
        std::uint64_t digest;
        std::uint32_t parent; // index into the arena; root points at itself
        Event incoming;
        std::uint32_t depth;
    };

    std::deque<Node> arena;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> seen;

    auto intern = [&](const SystemState& state, std::uint32_t parent, const Event* incoming,
                      std::uint32_t depth) -> bool {
        std::vector<std::uint8_t> bytes = to_bytes(state);
        std::uint64_t digest = hash_bytes(bytes);
        std::vector<std::uint32_t>& bucket = seen[digest];
        for (std::uint32_t idx : bucket)
            if (arena[idx].bytes == bytes) return false;
        if (arena.size() >= cfg.state_cap)
            throw CapExceededError("state cap of " + std::to_string(cfg.state_cap) +
                                   " states exceeded");
        bucket.push_back(static_cast<std::uint32_t>(arena.size()));
        arena.push_back(Node{std::move(bytes), digest, parent,
                             incoming ? *incoming : Event{RegisterConsumer{}}, depth});
        return true;
    };

    auto trace_to = [&](std::uint32_t idx) {
        Trace trace{init, {}};
        std::vector<Event> events;
        for (std::uint32_t at = idx; arena[at].parent != at; at = arena[at].parent)
            events.push_back(arena[at].incoming);
        for (auto it = events.rbegin(); it != events.rend(); ++it)
            trace.steps.push_back(TraceStep{*it, std::nullopt});
        return trace;
    };

    CheckerReport report;
    intern(init, 0, nullptr, 0);

    for (std::uint32_t i = 0; i < arena.size(); ++i) {
        const SystemState state = from_bytes(arena[i].bytes);
        const std::uint32_t depth = arena[i].depth;
        ++report.states_visited;
        report.depth_reached = std::max<std::size_t>(report.depth_reached, depth);

        std::vector<InvariantViolation> violated = check_selected(state, cfg.invariant_selection);
        if (!violated.empty()) {
            report.violations.push_back(Counterexample{trace_to(i), std::move(violated), {}});
            if (report.violations.size() >= kMaxCounterexamples) break;
            continue; // successors of a corrupt state are not informative
        }
        if (depth >= cfg.max_depth) continue;

        for (const Event& e : enumerate_enabled(state, u, cfg.mutant)) {
            ApplyResult next = apply_event(state, e, cfg.mutant);
            ++report.transitions_fired;
            intern(next.state, i, &e, depth + 1);
        }
    }

    report.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    return report;
}

CheckerReport fuzz(const CheckerConfig& cfg) {
    if (!cfg.random) throw std::invalid_argument("fuzz requires random mode configuration");
    const auto started = std::chrono::steady_clock::now();
    const Universe u = cfg.universe();
    const SystemState init = initial_state(u, u.operator_people());
    const RandomMode& mode = *cfg.random;

    CheckerReport report;
    std::mt19937_64 rng(mode.seed);

    for (std::size_t t = 0; t < mode.trace_count; ++t) {
        SystemState state = init;
        Trace trace{init, {}};
        for (std::size_t step = 0; step < mode.trace_length; ++step) {
            std::vector<Event> enabled = enumerate_enabled(state, u, cfg.mutant);
            if (enabled.empty()) break;
            const Event& e = enabled[static_cast<std::size_t>(rng() % enabled.size())];
            ApplyResult next = apply_event(state, e, cfg.mutant);
            trace.steps.push_back(TraceStep{e, std::nullopt});
            ++report.transitions_fired;
            ++report.states_visited;
            report.depth_reached = std::max(report.depth_reached, step + 1);

            std::vector<InvariantViolation> violated =
                check_selected(next.state, cfg.invariant_selection);
            if (!violated.empty()) {
                report.violations.push_back(Counterexample{trace, std::move(violated), {}});
                break;
            }
            SystemState recomputed = recompute_derived(next.state);
            if (!(recomputed == next.state)) {
                ++report.oracle_divergences;
                report.violations.push_back(Counterexample{
                    trace,
                    {},
                    "maintained access relations diverge from recompute_derived"});
                break;
            }
            state = std::move(next.state);
        }
        if (report.violations.size() >= kMaxCounterexamples) break;
    }

    report.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    return report;
}

std::string report_to_json(const CheckerReport& report, bool include_timing, int indent) {
    using nlohmann::json;
    json j;
    j["states_visited"] = report.states_visited;
    j["transitions_fired"] = report.transitions_fired;
    j["depth_reached"] = report.depth_reached;
    j["oracle_divergences"] = report.oracle_divergences;
    if (include_timing) j["elapsed_ms"] = report.elapsed.count();
    json violations = json::array();
    for (const Counterexample& cex : report.violations) {
        const Universe& u = cex.trace.initial.universe;
        json entry;
        entry["depth"] = cex.trace.steps.size();
        json events = json::array();
        for (const TraceStep& step : cex.trace.steps) events.push_back(event_line(step.event, u));
        entry["events"] = events;
        json invariants = json::array();
        json witnesses = json::array();
        for (const InvariantViolation& v : cex.violated) {
            invariants.push_back(std::string(to_string(v.id)));
            witnesses.push_back(v.witness);
        }
        entry["invariants"] = invariants;
        entry["witnesses"] = witnesses;
        if (cex.divergence) entry["divergence"] = *cex.divergence;
        violations.push_back(entry);
    }
    j["violations"] = violations;
    return j.dump(indent);
}

} // namespace mhr
