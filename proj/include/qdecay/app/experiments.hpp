#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "qdecay/app/config.hpp"
#include "qdecay/app/tables.hpp"

namespace qdecay::app {

struct RunResult {
    nlohmann::json summary;
    std::vector<std::filesystem::path> files;
};

// Each run validates the config, simulates every trajectory in memory and only
// then creates cfg.out_dir and writes its files (plus summary.json and a
// gnuplot script). Output bytes depend only on the config, not on threads.
RunResult run_decay(const ExperimentConfig& cfg, OutputFormat format = OutputFormat::csv);
RunResult run_homodyne(const ExperimentConfig& cfg, OutputFormat format = OutputFormat::csv);
RunResult run_rabi(const ExperimentConfig& cfg, OutputFormat format = OutputFormat::csv);

struct AnalyzeOptions {
    // Fall back to summary.json next to the input, then to gamma = 1, beta = 0.
    std::optional<double> gamma;
    std::optional<double> beta;
    std::size_t max_lag = 50;
    double dip_threshold_se = 5.0;
    std::filesystem::path out_dir = ".";
};

struct AnalyzeResult {
    nlohmann::json report;
    bool pass = true;
};

// Recognizes each input by its header, runs the matching checks and writes
// report.json. A header that matches no schema raises SchemaMismatch.
AnalyzeResult analyze(const std::vector<std::filesystem::path>& files, const AnalyzeOptions& options);

} // namespace qdecay::app
