#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mhr/kernel.hpp"

namespace mhr {

struct RandomMode {
    std::uint64_t seed = 1;
    std::size_t trace_count = 100;
    std::size_t trace_length = 20;
};

struct CheckerConfig {
    std::uint32_t people = 2;
    std::uint32_t operators = 1;
    std::uint32_t spaces = 2;
    std::uint32_t records = 2;
    std::uint32_t providers = 1;
    std::size_t max_depth = 6;
    std::optional<RandomMode> random;           // nullopt = exhaustive
    std::vector<InvariantId> invariant_selection; // empty = all
    std::size_t state_cap = 5'000'000;
    Mutant mutant = Mutant::None;

    Universe universe() const { return Universe(people, operators, spaces, records, providers); }
};

class CapExceededError : public std::runtime_error {
public:
    explicit CapExceededError(const std::string& what) : std::runtime_error(what) {}
};

// A reachable bad state: the shortest trace to it, the invariants it breaks,
// and/or the mismatch between maintained and recomputed access relations.
struct Counterexample {
    Trace trace;
    std::vector<InvariantViolation> violated;
    std::optional<std::string> divergence;
};

struct CheckerReport {
    std::size_t states_visited = 0;
    std::size_t transitions_fired = 0;
    std::size_t depth_reached = 0;
    std::vector<Counterexample> violations;
    std::size_t oracle_divergences = 0;
    std::chrono::milliseconds elapsed{0};

    bool clean() const { return violations.empty() && oracle_divergences == 0; }
};

// Every enabled event instantiation over the universe, in canonical order
// (event name, then parameter identifiers).
std::vector<Event> enumerate_enabled(const SystemState& s, const Universe& u,
                                     Mutant mutant = Mutant::None);

// Breadth-first exhaustive exploration from the initial state up to
// cfg.max_depth. States are deduplicated by digest with byte-equality
// confirmation, so each distinct state is visited and invariant-checked
// exactly once and counterexample traces are depth-minimal. Violating states
// are reported but not expanded. Throws CapExceededError when more than
// cfg.state_cap states would be stored.
CheckerReport explore(const CheckerConfig& cfg);

// cfg.random->trace_count seeded random traces of up to trace_length steps,
// sampling uniformly from the enabled events. Every step is invariant-checked
// and oracle-checked (maintained access relations vs recompute_derived).
CheckerReport fuzz(const CheckerConfig& cfg);

// Canonical JSON rendering; timing is off by default so equal runs are
// byte-identical.
std::string report_to_json(const CheckerReport& report, bool include_timing = false,
                           int indent = 2);

} // namespace mhr
