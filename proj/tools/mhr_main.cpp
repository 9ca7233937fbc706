#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "mhr/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCapExceeded = 3;

mhr::Mutant parse_mutant_or_exit(const std::string& name) {
    auto m = mhr::mutant_from_string(name);
    if (m) return *m;
    std::cerr << "unknown mutant: " << name << "\nknown mutants:";
    for (mhr::Mutant known : mhr::all_mutants()) std::cerr << " " << mhr::to_string(known);
    std::cerr << "\n";
    std::exit(kExitUsage);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Executable access-control machine for My Health Record consent rules"};
    app.require_subcommand(1);

    std::string run_path;
    bool run_dump = false;
    bool run_trace = false;
    std::string run_mutant = "none";
    CLI::App* run_cmd = app.add_subcommand("run", "Replay a scenario file");
    run_cmd->add_option("file", run_path, "scenario file")->required();
    run_cmd->add_flag("--dump", run_dump, "print final-state canonical JSON");
    run_cmd->add_flag("--trace", run_trace, "echo each step's outcome");
    run_cmd->add_option("--mutant", run_mutant, "run against a kernel mutant");

    mhr::CheckerConfig cfg;
    std::string mode = "exhaustive";
    std::string check_mutant = "none";
    std::string cex_dir = ".";
    std::uint64_t seed = 1;
    std::size_t traces = 100;
    std::size_t length = 20;
    bool timing = false;
    CLI::App* check_cmd = app.add_subcommand("check", "Explore or fuzz the state space");
    check_cmd->add_option("--people", cfg.people, "ordinary people in the universe");
    check_cmd->add_option("--spaces", cfg.spaces, "record spaces");
    check_cmd->add_option("--records", cfg.records, "record identifiers");
    check_cmd->add_option("--providers", cfg.providers, "service providers");
    check_cmd->add_option("--operators", cfg.operators, "system operators");
    check_cmd->add_option("--depth", cfg.max_depth, "exploration depth bound");
    check_cmd->add_option("--mode", mode, "exhaustive or random")
        ->check(CLI::IsMember({"exhaustive", "random"}));
    check_cmd->add_option("--seed", seed, "random mode seed");
    check_cmd->add_option("--traces", traces, "random mode trace count");
    check_cmd->add_option("--length", length, "random mode trace length");
    CLI::Option* cap_opt = check_cmd->add_option("--cap", cfg.state_cap, "state-count cap");
    check_cmd->add_option("--mutant", check_mutant, "check a kernel mutant");
    check_cmd->add_option("--cex-dir", cex_dir, "directory for counterexample files");
    check_cmd->add_flag("--timing", timing, "include elapsed_ms in the report");

    std::string corpus_dir = "scenarios";
    std::string corpus_mutant = "none";
    CLI::App* corpus_cmd = app.add_subcommand("corpus", "Run every shipped scenario");
    corpus_cmd->add_option("--dir", corpus_dir, "scenario directory");
    corpus_cmd->add_option("--mutant", corpus_mutant, "run against a kernel mutant");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*run_cmd) {
            mhr::Scenario sc = mhr::parse_scenario_file(run_path);
            mhr::RunOptions opts;
            opts.dump = run_dump;
            opts.trace_steps = run_trace;
            opts.mutant = parse_mutant_or_exit(run_mutant);
            mhr::RunResult res = mhr::run_scenario(sc, opts);
            std::cout << res.output;
            std::cerr << res.diagnostics;
            return res.exit_code;
        }

        if (*check_cmd) {
            cfg.mutant = parse_mutant_or_exit(check_mutant);
            if (cap_opt->count() == 0) {
                if (const char* env_cap = std::getenv("MHR_ACL_CAP")) {
                    char* end = nullptr;
                    unsigned long long cap = std::strtoull(env_cap, &end, 10);
                    if (end == env_cap || *end != '\0' || cap == 0) {
                        std::cerr << "bad MHR_ACL_CAP value: " << env_cap << "\n";
                        return kExitUsage;
                    }
                    cfg.state_cap = static_cast<std::size_t>(cap);
                }
            }
            if (mode == "random") cfg.random = mhr::RandomMode{seed, traces, length};

            mhr::CheckerReport report = mode == "random" ? mhr::fuzz(cfg) : mhr::explore(cfg);
            std::cout << mhr::report_to_json(report, timing) << "\n";
            std::size_t n = 0;
            for (const mhr::Counterexample& cex : report.violations) {
                std::string path =
                    cex_dir + "/counterexample_" + std::to_string(++n) + ".scenario";
                std::ofstream out(path);
                if (!out) {
                    std::cerr << "cannot write " << path << "\n";
                    return kExitUsage;
                }
                out << mhr::scenario_from_counterexample(cex);
                std::cerr << "counterexample written to " << path << "\n";
            }
            return report.clean() ? kExitOk : kExitViolation;
        }

        if (*corpus_cmd)
            return mhr::run_corpus(corpus_dir, std::cout, std::cerr,
                                   parse_mutant_or_exit(corpus_mutant));
    } catch (const mhr::CapExceededError& e) {
        std::cerr << e.what() << "\n";
        return kExitCapExceeded;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
