#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mhr/checker.hpp"

namespace mhr {

// One parsed event line. Lines without an `expect` annotation must apply, the
// same as `expect ok`.
struct ScenarioStep {
    Event event;
    std::optional<bool> expect_applied;
    std::size_t line = 0;
    std::string text;
};

struct Scenario {
    Universe universe{1, 0, 1, 0, 0};
    std::vector<ScenarioStep> steps;
    std::string source_name;
};

class ScenarioParseError : public std::runtime_error {
public:
    ScenarioParseError(std::string_view source, std::size_t line, std::size_t column,
                       const std::string& message);

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

// Grammar: a `universe people=<n> spaces=<n> records=<n> providers=<n>
// operators=<n>` header, then one event per line, `<event_name> <arg> ...
// [expect ok|deny]`. `#` starts a comment. Identifiers are the universe
// tokens p1.., op1.., m1.., r1.., sp1...
Scenario parse_scenario(std::string_view text, std::string_view source_name = "<scenario>");
Scenario parse_scenario_file(const std::string& path);

std::string universe_header_line(const Universe& u);

struct RunOptions {
    bool dump = false;        // print final-state canonical JSON
    bool trace_steps = false; // echo each step's outcome
    Mutant mutant = Mutant::None;
    int json_indent = 2;
};

struct RunResult {
    int exit_code = 0;        // 0 all expectations met and final invariants hold
    std::string output;       // stdout payload
    std::string diagnostics;  // stderr payload
    SystemState final_state;
};

RunResult run_scenario(const Scenario& sc, const RunOptions& opts = {});

// Renders a checker counterexample as a runnable scenario file.
std::string scenario_from_counterexample(const Counterexample& cex);

// Runs every *.scenario file under dir in name order; prints one PASS/FAIL
// line per file. Returns 0 iff all pass, 2 on an unreadable directory.
int run_corpus(const std::string& dir, std::ostream& out, std::ostream& err,
               Mutant mutant = Mutant::None);

} // namespace mhr
