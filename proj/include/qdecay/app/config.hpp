#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "qdecay/core.hpp"
#include "qdecay/homodyne.hpp"
#include "qdecay/rabi.hpp"

namespace qdecay::app {

enum class Command { decay, homodyne, rabi };

std::string_view to_string(Command command);

struct ExperimentConfig {
    ModelParams params;
    rabi::DriveParams drive;
    std::optional<QubitState> initial;

    double alpha_mag = 1.0;
    double theta = 0.0;
    homodyne::NoiseModel noise = homodyne::NoiseModel::white;
    double kappa = 0.0;
    double noise_scale = 1.0;
    std::size_t max_lag = 50;

    // Fluorescence time bins and occupation-drop bins.
    double bin_width = 0.5;
    double drop_bin_width = 0.05;
    std::size_t record_stride = 0;

    std::filesystem::path out_dir = ".";
    unsigned threads = 1;

    // Default initial state of each command: excited for decay and
    // homodyne, ground for rabi.
    QubitState initial_state(Command command) const;
    homodyne::HomodyneParams homodyne_params() const;

    // Runs every check the engines would perform so a bad config fails
    // before any output is written.
    void validate(Command command) const;

    nlohmann::json to_json() const;
};

// Parses a config document. Unknown keys, wrong types and missing required
// fields raise Error(InvalidConfig) naming the field.
ExperimentConfig parse_config(const nlohmann::json& doc, Command command);

// Reads and parses a config file; JSON syntax errors report line and column.
ExperimentConfig load_config(const std::filesystem::path& path, Command command);

} // namespace qdecay::app
