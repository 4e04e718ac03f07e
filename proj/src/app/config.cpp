#include "qdecay/app/config.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace qdecay::app {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& why) {
    throw Error(ErrorCode::InvalidConfig, "config field '" + field + "': " + why);
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "model", "gamma",  "beta",  "omega0",     "omega1",     "omega_rabi",     "dt",
        "t_max", "n_traj", "seed",  "initial_state", "dipole",  "field",          "alpha_mag",
        "theta", "noise",  "kappa", "noise_scale", "max_lag",  "bin_width",      "drop_bin_width",
        "record_stride",   "out_dir", "threads"};
    return keys;
}

double get_number(const json& doc, const std::string& key, std::optional<double> fallback) {
    const auto it = doc.find(key);
    if (it == doc.end()) {
        if (!fallback) config_error(key, "missing required field");
        return *fallback;
    }
    if (!it->is_number()) config_error(key, "expected a number");
    const double v = it->get<double>();
    if (!std::isfinite(v)) config_error(key, "must be finite");
    return v;
}

std::uint64_t get_unsigned(const json& doc, const std::string& key, std::optional<std::uint64_t> fallback) {
    const auto it = doc.find(key);
    if (it == doc.end()) {
        if (!fallback) config_error(key, "missing required field");
        return *fallback;
    }
    if (!it->is_number_unsigned()) {
        // JSON has a single number type; 1e5 written as a float is accepted
        // when it is a non-negative integer value.
        if (it->is_number_float()) {
            const double v = it->get<double>();
            if (v >= 0.0 && v <= 9.007199254740992e15 && std::floor(v) == v) {
                return static_cast<std::uint64_t>(v);
            }
        }
        config_error(key, "expected a non-negative integer");
    }
    return it->get<std::uint64_t>();
}

std::string get_string(const json& doc, const std::string& key, std::optional<std::string> fallback) {
    const auto it = doc.find(key);
    if (it == doc.end()) {
        if (!fallback) config_error(key, "missing required field");
        return *fallback;
    }
    if (!it->is_string()) config_error(key, "expected a string");
    return it->get<std::string>();
}

rabi::Vec3 get_vec3(const json& value, const std::string& key) {
    if (!value.is_array() || value.size() != 3) config_error(key, "expected an array of 3 numbers");
    rabi::Vec3 out{};
    for (std::size_t i = 0; i < 3; ++i) {
        if (!value[i].is_number()) config_error(key, "expected an array of 3 numbers");
        out[i] = value[i].get<double>();
        if (!std::isfinite(out[i])) config_error(key, "must be finite");
    }
    return out;
}

Complex get_complex(const json& value, const std::string& key) {
    if (value.is_number()) return {value.get<double>(), 0.0};
    if (!value.is_array() || value.size() != 2 || !value[0].is_number() || !value[1].is_number()) {
        config_error(key, "expected a number or [re, im]");
    }
    return {value[0].get<double>(), value[1].get<double>()};
}

QubitState get_initial(const json& value) {
    if (value.is_string()) {
        const auto name = value.get<std::string>();
        if (name == "excited") return QubitState::excited_state();
        if (name == "ground") return QubitState::ground_state();
        config_error("initial_state", "expected 'excited', 'ground' or {excited, ground}");
    }
    if (!value.is_object()) config_error("initial_state", "expected 'excited', 'ground' or {excited, ground}");
    for (const auto& [k, v] : value.items()) {
        if (k != "excited" && k != "ground") config_error("initial_state." + k, "unknown key");
    }
    QubitState s{{0.0, 0.0}, {0.0, 0.0}, 0.0};
    if (value.contains("excited")) s.excited = get_complex(value["excited"], "initial_state.excited");
    if (value.contains("ground")) s.ground = get_complex(value["ground"], "initial_state.ground");
    if (!std::isfinite(s.two_level_weight()) || s.two_level_weight() < 1e-300) {
        config_error("initial_state", "amplitudes must be finite and not all zero");
    }
    return normalize(s);
}

void rethrow_as_config(const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw e;
    throw Error(ErrorCode::InvalidConfig, std::string(e.what()));
}

} // namespace

std::string_view to_string(Command command) {
    switch (command) {
    case Command::decay: return "decay";
    case Command::homodyne: return "homodyne";
    case Command::rabi: return "rabi";
    }
    return "unknown";
}

QubitState ExperimentConfig::initial_state(Command command) const {
    if (initial) return *initial;
    return command == Command::rabi ? QubitState::ground_state() : QubitState::excited_state();
}

homodyne::HomodyneParams ExperimentConfig::homodyne_params() const {
    homodyne::HomodyneParams hp;
    hp.gamma = params.gamma;
    hp.omega0 = params.omega0;
    hp.omega1 = params.omega1;
    hp.dt = params.dt;
    hp.t_max = params.t_max;
    hp.theta = theta;
    hp.noise = noise;
    hp.noise_scale = noise_scale;
    hp.beta = params.beta;
    hp.kappa = kappa;
    hp.initial = initial_state(Command::homodyne);
    return hp;
}

void ExperimentConfig::validate(Command command) const {
    try {
        params.validate();
        if (threads < 1) config_error("threads", "must be >= 1");
        switch (command) {
        case Command::decay:
            break;
        case Command::homodyne: {
            homodyne_params().validate();
            if (!(alpha_mag > 0.0)) config_error("alpha_mag", "must be > 0");
            if (max_lag < 1) config_error("max_lag", "must be >= 1");
            const auto n_steps = step_count(params);
            if (n_steps <= max_lag) config_error("max_lag", "must be smaller than t_max / dt");
            break;
        }
        case Command::rabi: {
            if (params.dt * std::max(params.gamma, params.omega_rabi) > 0.05) {
                config_error("dt", "dt * max(gamma, omega_rabi) must be <= 0.05");
            }
            if (!(bin_width > 0.0) || bin_width > params.t_max) config_error("bin_width", "must lie in (0, t_max]");
            if (!(drop_bin_width > 0.0) || drop_bin_width > 1.0) config_error("drop_bin_width", "must lie in (0, 1]");
            break;
        }
        }
    } catch (const Error& e) {
        rethrow_as_config(e);
    }
}

json ExperimentConfig::to_json() const {
    json j;
    j["model"] = std::string(qdecay::to_string(params.model));
    j["gamma"] = params.gamma;
    j["beta"] = params.beta;
    j["omega0"] = params.omega0;
    j["omega1"] = params.omega1;
    j["omega_rabi"] = params.omega_rabi;
    j["dt"] = params.dt;
    j["t_max"] = params.t_max;
    j["n_traj"] = params.n_traj;
    j["seed"] = params.seed;
    if (initial) {
        j["initial_state"] = {{"excited", {initial->excited.real(), initial->excited.imag()}},
                              {"ground", {initial->ground.real(), initial->ground.imag()}}};
    }
    if (drive.dipole) j["dipole"] = *drive.dipole;
    if (drive.field) j["field"] = *drive.field;
    j["alpha_mag"] = alpha_mag;
    j["theta"] = theta;
    j["noise"] = std::string(homodyne::to_string(noise));
    j["kappa"] = kappa;
    j["noise_scale"] = noise_scale;
    j["max_lag"] = max_lag;
    j["bin_width"] = bin_width;
    j["drop_bin_width"] = drop_bin_width;
    j["record_stride"] = record_stride;
    j["out_dir"] = out_dir.string();
    j["threads"] = threads;
    return j;
}

ExperimentConfig parse_config(const json& doc, Command command) {
    if (!doc.is_object()) config_error("<root>", "config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (!known_keys().contains(key)) config_error(key, "unknown key");
    }

    ExperimentConfig cfg;
    ModelParams& p = cfg.params;
    const bool needs_model = command != Command::homodyne;
    try {
        p.model = parse_model(get_string(doc, "model", needs_model ? std::nullopt : std::optional<std::string>("qmop")));
    } catch (const Error& e) {
        rethrow_as_config(e);
    }
    p.gamma = get_number(doc, "gamma", std::nullopt);
    p.beta = get_number(doc, "beta", 0.0);
    p.omega0 = get_number(doc, "omega0", 0.0);
    p.omega1 = get_number(doc, "omega1", 0.0);
    p.omega_rabi = get_number(doc, "omega_rabi", 0.0);
    p.dt = get_number(doc, "dt", std::nullopt);
    p.t_max = get_number(doc, "t_max", std::nullopt);
    p.n_traj = get_unsigned(doc, "n_traj", std::nullopt);
    p.seed = get_unsigned(doc, "seed", 0);

    if (doc.contains("initial_state")) cfg.initial = get_initial(doc["initial_state"]);
    if (doc.contains("dipole")) cfg.drive.dipole = get_vec3(doc["dipole"], "dipole");
    if (doc.contains("field")) cfg.drive.field = get_vec3(doc["field"], "field");
    cfg.drive.omega_rabi = p.omega_rabi;
    try {
        cfg.drive.resolve();
    } catch (const Error& e) {
        rethrow_as_config(e);
    }
    p.omega_rabi = cfg.drive.omega_rabi;

    cfg.alpha_mag = get_number(doc, "alpha_mag", 1.0);
    cfg.theta = get_number(doc, "theta", 0.0);
    try {
        cfg.noise = homodyne::parse_noise_model(get_string(doc, "noise", std::string("white")));
    } catch (const Error& e) {
        rethrow_as_config(e);
    }
    cfg.kappa = get_number(doc, "kappa", 0.0);
    cfg.noise_scale = get_number(doc, "noise_scale", 1.0);
    cfg.max_lag = get_unsigned(doc, "max_lag", 50);
    cfg.bin_width = get_number(doc, "bin_width", 0.5);
    cfg.drop_bin_width = get_number(doc, "drop_bin_width", 0.05);
    cfg.record_stride = get_unsigned(doc, "record_stride", 0);
    cfg.out_dir = get_string(doc, "out_dir", std::string("."));
    const auto threads = get_unsigned(doc, "threads", 1);
    if (threads < 1 || threads > 1024) config_error("threads", "must lie in [1, 1024]");
    cfg.threads = static_cast<unsigned>(threads);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, Command command) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto offset = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n');
        const auto line_start = text.rfind('\n', offset == 0 ? 0 : offset - 1);
        const auto column = line_start == std::string::npos ? offset + 1 : offset - line_start;
        throw Error(ErrorCode::InvalidConfig, path.string() + ":" + std::to_string(line) + ":" +
                                                  std::to_string(column) + ": invalid JSON (" + e.what() + ")");
    }
    return parse_config(doc, command);
}

} // namespace qdecay::app
