// qdecay: command-line front end for the trajectory simulator.
//
//   qdecay decay    --config cfg.json [--seed N] [--out-dir DIR] [--threads N] [--format csv|json] [--strict]
//   qdecay homodyne --config cfg.json ...
//   qdecay rabi     --config cfg.json ...
//   qdecay analyze  FILE... [--gamma G] [--beta B] [--max-lag K] [--out-dir DIR] [--strict]
//
// Exit codes: 0 ok, 2 config or schema error, 3 I/O error, 4 failed checks with --strict.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qdecay/app/experiments.hpp"
#include "qdecay/error.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitAnalysis = 4;

struct RunFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<unsigned> threads;
    std::string format = "csv";
    bool strict = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
    cmd->add_option("--config", flags.config, "JSON experiment config")->required();
    cmd->add_option("--seed", flags.seed, "override the config seed");
    cmd->add_option("--out-dir", flags.out_dir, "override the output directory");
    cmd->add_option("--threads", flags.threads, "worker threads")->check(CLI::Range(1u, 1024u));
    cmd->add_option("--format", flags.format, "table format")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_flag("--strict", flags.strict, "exit 4 when a built-in check fails");
}

// Built-in checks that a run summary may carry; --strict turns a false into exit 4.
bool summary_pass(const nlohmann::json& s) {
    bool ok = true;
    if (s.contains("decay") && s["decay"].contains("ks_pass")) ok = ok && s["decay"]["ks_pass"].get<bool>();
    if (s.contains("occupation_drop") && s["occupation_drop"].contains("moments_pass")) {
        ok = ok && s["occupation_drop"]["moments_pass"].get<bool>();
    }
    if (s.contains("late_intensity")) ok = ok && s["late_intensity"]["within_3se"].get<bool>();
    return ok;
}

int run_experiment(qdecay::app::Command command, const RunFlags& flags) {
    using namespace qdecay::app;
    auto cfg = load_config(flags.config, command);
    if (flags.seed) cfg.params.seed = *flags.seed;
    if (flags.out_dir) cfg.out_dir = *flags.out_dir;
    if (flags.threads) cfg.threads = *flags.threads;
    const auto format = parse_format(flags.format);

    RunResult result;
    switch (command) {
    case Command::decay: result = run_decay(cfg, format); break;
    case Command::homodyne: result = run_homodyne(cfg, format); break;
    case Command::rabi: result = run_rabi(cfg, format); break;
    }
    for (const auto& f : result.files) std::cout << f.string() << '\n';
    if (flags.strict && !summary_pass(result.summary)) {
        std::cerr << "qdecay: built-in checks failed, see summary.json\n";
        return kExitAnalysis;
    }
    return kExitOk;
}

int exit_code_for(qdecay::ErrorCode code) {
    return code == qdecay::ErrorCode::Io ? kExitIo : kExitConfig;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo quantum-trajectory simulator for two-level atom decay"};
    app.require_subcommand(1);

    RunFlags decay_flags, homodyne_flags, rabi_flags;
    auto* decay = app.add_subcommand("decay", "spontaneous decay ensemble");
    add_run_flags(decay, decay_flags);
    auto* homodyne = app.add_subcommand("homodyne", "homodyne detection records");
    add_run_flags(homodyne, homodyne_flags);
    auto* rabi = app.add_subcommand("rabi", "driven Rabi oscillations and fluorescence");
    add_run_flags(rabi, rabi_flags);

    std::vector<std::string> inputs;
    qdecay::app::AnalyzeOptions analyze_options;
    std::optional<double> gamma, beta;
    std::string analyze_out = ".";
    bool analyze_strict = false;
    auto* analyze = app.add_subcommand("analyze", "statistical checks on written tables");
    analyze->add_option("files", inputs, "CSV or JSON tables")->required();
    analyze->add_option("--gamma", gamma, "decay rate (default: from summary.json)");
    analyze->add_option("--beta", beta, "fluctuation rate (default: from summary.json)");
    analyze->add_option("--max-lag", analyze_options.max_lag, "autocorrelation lags");
    analyze->add_option("--out-dir", analyze_out, "where report.json goes");
    analyze->add_flag("--strict", analyze_strict, "exit 4 when a check fails");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (decay->parsed()) return run_experiment(qdecay::app::Command::decay, decay_flags);
        if (homodyne->parsed()) return run_experiment(qdecay::app::Command::homodyne, homodyne_flags);
        if (rabi->parsed()) return run_experiment(qdecay::app::Command::rabi, rabi_flags);

        analyze_options.gamma = gamma;
        analyze_options.beta = beta;
        analyze_options.out_dir = analyze_out;
        std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
        const auto result = qdecay::app::analyze(paths, analyze_options);
        std::cout << result.report.dump(2) << '\n';
        if (analyze_strict && !result.pass) return kExitAnalysis;
        return kExitOk;
    } catch (const qdecay::Error& e) {
        std::cerr << "qdecay: " << qdecay::to_string(e.code()) << ": " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::bad_alloc&) {
        std::cerr << "qdecay: out of memory\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "qdecay: " << e.what() << '\n';
        return kExitConfig;
    }
}
