#include "mhr/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace mhr {

ScenarioParseError::ScenarioParseError(std::string_view source, std::size_t line,
                                       std::size_t column, const std::string& message)
    : std::runtime_error(std::string(source) + ":" + std::to_string(line) + ":" +
                         std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

struct Token {
    std::string_view text;
    std::size_t column; // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        if (line[i] == '#') break;
        if (std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) &&
               line[i] != '#')
            ++i;
        out.push_back(Token{line.substr(start, i - start), start + 1});
    }
    return out;
}

class LineParser {
public:
    LineParser(std::string_view source, std::size_t line, const Universe* u)
        : source_(source), line_(line), u_(u) {}

    [[noreturn]] void fail(std::size_t column, const std::string& message) const {
        throw ScenarioParseError(source_, line_, column, message);
    }

    std::uint32_t number(const Token& t, std::string_view key) const {
        std::string_view text = t.text;
        if (text.substr(0, key.size() + 1) != std::string(key) + "=")
            fail(t.column, "expected " + std::string(key) + "=<n>");
        std::string_view digits = text.substr(key.size() + 1);
        if (digits.empty() || digits.size() > 6) fail(t.column, "bad count in " + std::string(text));
        std::uint32_t n = 0;
        for (char c : digits) {
            if (!std::isdigit(static_cast<unsigned char>(c)))
                fail(t.column, "bad count in " + std::string(text));
            n = n * 10 + static_cast<std::uint32_t>(c - '0');
        }
        return n;
    }

    Id id(const Token& t) const {
        auto parsed = u_->parse_token(t.text);
        if (!parsed)
            fail(t.column, "identifier outside declared universe: " + std::string(t.text));
        return *parsed;
    }

    Id id_of_kind(const Token& t, IdKind kind, const char* what) const {
        Id parsed = id(t);
        if (parsed.kind() != kind)
            fail(t.column, "expected a " + std::string(what) + " identifier, got " +
                               std::string(t.text));
        return parsed;
    }

    Id person(const Token& t) const { return id_of_kind(t, IdKind::Person, "person"); }
    Id space(const Token& t) const { return id_of_kind(t, IdKind::Space, "record-space"); }
    Id record(const Token& t) const { return id_of_kind(t, IdKind::Record, "record"); }
    Id provider(const Token& t) const { return id_of_kind(t, IdKind::Provider, "provider"); }

    ActorRef actor(const Token& t) const {
        Id parsed = id(t);
        if (parsed.kind() == IdKind::Provider) return ActorRef::provider(parsed);
        if (parsed.kind() != IdKind::Person)
            fail(t.column, "expected a person or provider identifier, got " + std::string(t.text));
        if (parsed.index() >= u_->people_count()) return ActorRef::operator_(parsed);
        return ActorRef::consumer(parsed);
    }

    RecordCategory category(const Token& t) const {
        if (t.text == "general") return RecordCategory::General;
        if (t.text == "restricted") return RecordCategory::Restricted;
        fail(t.column, "expected general or restricted, got " + std::string(t.text));
    }

private:
    std::string_view source_;
    std::size_t line_;
    const Universe* u_;
};

Event build_event(const LineParser& p, const std::vector<Token>& toks,
                  std::span<const Token> args) {
    const Token& head = toks.front();
    std::string_view name = head.text;
    auto need = [&](std::size_t n) {
        if (args.size() != n)
            p.fail(head.column, std::string(name) + " expects " + std::to_string(n) +
                                    " arguments, got " + std::to_string(args.size()));
    };

    if (name == "register_consumer") {
        need(2);
        return RegisterConsumer{p.person(args[0]), p.space(args[1])};
    }
    if (name == "opt_out") {
        need(1);
        return OptOut{p.person(args[0])};
    }
    if (name == "upload_record") {
        need(4);
        return UploadRecord{p.actor(args[0]), p.person(args[1]), p.record(args[2]),
                            p.category(args[3])};
    }
    if (name == "delete_record") {
        need(3);
        return DeleteRecord{p.actor(args[0]), p.person(args[1]), p.record(args[2])};
    }
    if (name == "restrict_record") {
        need(3);
        return RestrictRecord{p.actor(args[0]), p.person(args[1]), p.record(args[2])};
    }
    if (name == "general_record") {
        need(3);
        return GeneralRecord{p.actor(args[0]), p.person(args[1]), p.record(args[2])};
    }
    if (name == "hide_record") {
        need(3);
        return HideRecord{p.actor(args[0]), p.person(args[1]), p.record(args[2])};
    }
    if (name == "unhide_record") {
        need(2);
        return UnhideRecord{p.person(args[0]), p.record(args[1])};
    }
    if (name == "view_record") {
        need(2);
        return ViewRecord{p.actor(args[0]), p.record(args[1])};
    }
    if (name == "register_service_provider") {
        need(1);
        return RegisterServiceProvider{p.provider(args[0])};
    }
    if (name == "assign_provider") {
        need(3);
        return AssignProvider{p.actor(args[0]), p.person(args[1]), p.provider(args[2])};
    }
    if (name == "grant_general_sp") {
        need(3);
        return GrantGeneralSp{p.actor(args[0]), p.person(args[1]), p.provider(args[2])};
    }
    if (name == "grant_restricted_sp") {
        need(3);
        return GrantRestrictedSp{p.actor(args[0]), p.person(args[1]), p.provider(args[2])};
    }
    if (name == "revoke_access_sp") {
        need(3);
        return RevokeAccessSp{p.actor(args[0]), p.person(args[1]), p.provider(args[2])};
    }
    if (name == "upload_general_record_SP") {
        need(3);
        return UploadGeneralRecordSp{p.provider(args[0]), p.person(args[1]), p.record(args[2])};
    }
    if (name == "upload_restricted_record_SP") {
        need(3);
        return UploadRestrictedRecordSp{p.provider(args[0]), p.person(args[1]),
                                        p.record(args[2])};
    }
    if (name == "add_nominated_general") {
        need(3);
        return AddNominatedGeneral{p.actor(args[0]), p.person(args[1]), p.person(args[2])};
    }
    if (name == "add_nominated_restricted") {
        need(3);
        return AddNominatedRestricted{p.actor(args[0]), p.person(args[1]), p.person(args[2])};
    }
    if (name == "grant_full_access_to_nominated") {
        need(3);
        return GrantFullAccessNominated{p.actor(args[0]), p.person(args[1]), p.person(args[2])};
    }
    if (name == "remove_nominated") {
        need(3);
        return RemoveNominated{p.actor(args[0]), p.person(args[1]), p.person(args[2])};
    }
    if (name == "upload_general_record_nominated") {
        need(3);
        return UploadGeneralRecordNominated{p.person(args[0]), p.person(args[1]),
                                            p.record(args[2])};
    }
    if (name == "upload_restricted_record_nominated") {
        need(3);
        return UploadRestrictedRecordNominated{p.person(args[0]), p.person(args[1]),
                                               p.record(args[2])};
    }
    if (name == "assign_authorised_rep") {
        need(3);
        return AssignAuthorisedRep{p.person(args[0]), p.person(args[1]), p.person(args[2])};
    }
    if (name == "remove_authorised_rep") {
        need(3);
        return RemoveAuthorisedRep{p.person(args[0]), p.person(args[1]), p.person(args[2])};
    }
    p.fail(head.column, "unknown event: " + std::string(name));
}

} // namespace

std::string universe_header_line(const Universe& u) {
    std::ostringstream os;
    os << "universe people=" << u.people_count() << " spaces=" << u.space_count()
       << " records=" << u.record_count() << " providers=" << u.provider_count()
       << " operators=" << u.operator_count();
    return os.str();
}

Scenario parse_scenario(std::string_view text, std::string_view source_name) {
    Scenario sc;
    sc.source_name = std::string(source_name);

    std::optional<Universe> universe;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        std::vector<Token> toks = tokenize(line);
        if (toks.empty()) continue;

        if (!universe) {
            LineParser p(source_name, line_no, nullptr);
            if (toks[0].text != "universe")
                p.fail(toks[0].column, "expected universe header before events");
            if (toks.size() != 6)
                p.fail(toks[0].column,
                       "universe header needs people, spaces, records, providers, operators");
            std::uint32_t people = p.number(toks[1], "people");
            std::uint32_t spaces = p.number(toks[2], "spaces");
            std::uint32_t records = p.number(toks[3], "records");
            std::uint32_t providers = p.number(toks[4], "providers");
            std::uint32_t operators = p.number(toks[5], "operators");
            try {
                universe.emplace(people, operators, spaces, records, providers);
            } catch (const std::invalid_argument& e) {
                p.fail(toks[0].column, e.what());
            }
            continue;
        }

        LineParser p(source_name, line_no, &*universe);
        std::span<const Token> args(toks.data() + 1, toks.size() - 1);
        std::optional<bool> expect;
        if (args.size() >= 2 && args[args.size() - 2].text == "expect") {
            const Token& verdict = args.back();
            if (verdict.text == "ok")
                expect = true;
            else if (verdict.text == "deny")
                expect = false;
            else
                p.fail(verdict.column, "expect takes ok or deny");
            args = args.first(args.size() - 2);
        }

        ScenarioStep step;
        step.event = build_event(p, toks, args);
        step.expect_applied = expect;
        step.line = line_no;
        step.text = std::string(line.substr(0, line.find('#')));
        sc.steps.push_back(std::move(step));
    }

    if (!universe)
        throw ScenarioParseError(source_name, line_no ? line_no : 1, 1, "missing universe header");
    sc.universe = *universe;
    return sc;
}

Scenario parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str(), path);
}

RunResult run_scenario(const Scenario& sc, const RunOptions& opts) {
    std::ostringstream out;
    std::ostringstream err;
    SystemState state = initial_state(sc.universe, sc.universe.operator_people());
    bool failed = false;

    for (const ScenarioStep& step : sc.steps) {
        ApplyResult result = apply_event(state, step.event, opts.mutant);
        if (opts.trace_steps) {
            if (result.applied())
                out << "ok    " << event_line(step.event, sc.universe) << "\n";
            else
                out << "deny  " << event_line(step.event, sc.universe) << "  # "
                    << result.rejection->guard << ": " << result.rejection->detail << "\n";
        }
        bool expected = step.expect_applied.value_or(true);
        if (result.applied() != expected) {
            err << sc.source_name << ":" << step.line << ": expected "
                << (expected ? "ok" : "deny") << ", event "
                << event_line(step.event, sc.universe) << " was ";
            if (result.applied())
                err << "applied\n";
            else
                err << "denied by " << result.rejection->guard << " ("
                    << result.rejection->detail << ")\n";
            failed = true;
            state = std::move(result.state);
            break;
        }
        state = std::move(result.state);
    }

    if (!failed) {
        for (const InvariantViolation& v : check_invariants(state)) {
            err << sc.source_name << ": invariant " << to_string(v.id) << " violated: " << v.witness
                << "\n";
            failed = true;
        }
    }
    if (opts.dump) out << to_canonical_json(state, opts.json_indent) << "\n";

    RunResult res{failed ? 1 : 0, out.str(), err.str(), std::move(state)};
    return res;
}

std::string scenario_from_counterexample(const Counterexample& cex) {
    const Universe& u = cex.trace.initial.universe;
    std::ostringstream os;
    os << "# checker counterexample";
    if (!cex.violated.empty()) {
        os << ":";
        for (const InvariantViolation& v : cex.violated) os << " " << to_string(v.id);
    }
    os << "\n" << universe_header_line(u) << "\n";
    for (const TraceStep& step : cex.trace.steps)
        os << event_line(step.event, u) << " expect " << (step.rejection ? "deny" : "ok") << "\n";
    for (const InvariantViolation& v : cex.violated)
        os << "# violated " << to_string(v.id) << ": " << v.witness << "\n";
    if (cex.divergence) os << "# divergence: " << *cex.divergence << "\n";
    return os.str();
}

int run_corpus(const std::string& dir, std::ostream& out, std::ostream& err, Mutant mutant) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        err << "not a directory: " << dir << "\n";
        return 2;
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".scenario")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::size_t passed = 0;
    for (const fs::path& file : files) {
        std::string name = file.filename().string();
        try {
            Scenario sc = parse_scenario_file(file.string());
            RunResult res = run_scenario(sc, RunOptions{.mutant = mutant});
            if (res.exit_code == 0) {
                out << "PASS " << name << "\n";
                ++passed;
            } else {
                out << "FAIL " << name << "\n";
                err << res.diagnostics;
            }
        } catch (const std::exception& e) {
            out << "FAIL " << name << "\n";
            err << e.what() << "\n";
        }
    }
    out << passed << "/" << files.size() << " scenarios passed\n";
    return (passed == files.size() && !files.empty()) ? 0 : 1;
}

} // namespace mhr
