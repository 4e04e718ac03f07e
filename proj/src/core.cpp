#include "qdecay/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qdecay {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::EmptySubspace: return "EmptySubspace";
    case ErrorCode::NonPositiveRate: return "NonPositiveRate";
    case ErrorCode::NegativeTime: return "NegativeTime";
    case ErrorCode::PhotonComponentPresent: return "PhotonComponentPresent";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::PositiveTau: return "PositiveTau";
    case ErrorCode::OutOfRangeA: return "OutOfRangeA";
    case ErrorCode::NonPositiveGamma: return "NonPositiveGamma";
    case ErrorCode::NonPositiveAlpha: return "NonPositiveAlpha";
    case ErrorCode::RTooLarge: return "RTooLarge";
    case ErrorCode::InvalidDensity: return "InvalidDensity";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::EmptySamples: return "EmptySamples";
    case ErrorCode::BadRange: return "BadRange";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorCode::WrongModel: return "WrongModel";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

namespace {
constexpr double kMinNorm = 1e-300;
// Tolerance inside which normalize() treats a state as already normalized.
constexpr double kNormalizedTol = 1e-14;

bool finite(const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }
} // namespace

QubitState normalize(const QubitState& state) {
    if (!finite(state.excited) || !finite(state.ground) || !std::isfinite(state.photon_weight)) {
        throw Error(ErrorCode::ZeroNorm, "state has non-finite components");
    }
    if (state.photon_weight < 0.0) {
        throw Error(ErrorCode::ZeroNorm, "negative photon weight");
    }
    const double total = state.total_weight();
    if (total < kMinNorm) {
        throw Error(ErrorCode::ZeroNorm, "total weight " + std::to_string(total));
    }
    if (std::abs(total - 1.0) <= kNormalizedTol) return state;
    const double scale = 1.0 / std::sqrt(total);
    return {state.excited * scale, state.ground * scale, state.photon_weight / total};
}

double occupation(const QubitState& state) {
    return std::clamp(std::norm(state.excited), 0.0, 1.0);
}

double sigma_x_expectation(const QubitState& state) {
    const double sub = state.two_level_weight();
    if (sub < kMinNorm) {
        throw Error(ErrorCode::EmptySubspace, "two-level weight vanishes");
    }
    return 2.0 * (std::conj(state.ground) * state.excited).real() / sub;
}

RngStream derive_stream(std::uint64_t root_seed, std::uint64_t traj_id) {
    return RngStream(root_seed, traj_id);
}

double photon_packet_length(double gamma, double c_light) {
    if (!(gamma > 0.0)) {
        throw Error(ErrorCode::NonPositiveRate, "gamma must be positive");
    }
    return c_light / gamma;
}

std::string_view to_string(Model model) {
    switch (model) {
    case Model::qmop: return "qmop";
    case Model::swf: return "swf";
    case Model::nsm: return "nsm";
    }
    return "unknown";
}

Model parse_model(std::string_view name) {
    if (name == "qmop") return Model::qmop;
    if (name == "swf") return Model::swf;
    if (name == "nsm") return Model::nsm;
    throw Error(ErrorCode::InvalidParams, "model: unknown value '" + std::string(name) + "'");
}

void ModelParams::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw Error(ErrorCode::InvalidParams, field + ": " + why);
    };
    auto check_finite = [&](const char* field, double v) {
        if (!std::isfinite(v)) fail(field, "must be finite");
    };
    check_finite("gamma", gamma);
    check_finite("beta", beta);
    check_finite("omega0", omega0);
    check_finite("omega1", omega1);
    check_finite("omega_rabi", omega_rabi);
    check_finite("dt", dt);
    check_finite("t_max", t_max);
    if (gamma < 0.0) fail("gamma", "must be >= 0");
    if (beta < 0.0) fail("beta", "must be >= 0");
    if (omega_rabi < 0.0) fail("omega_rabi", "must be >= 0");
    if (!(dt > 0.0)) fail("dt", "must be > 0");
    if (!(t_max > 0.0)) fail("t_max", "must be > 0");
    if (dt > t_max) fail("dt", "must not exceed t_max");
    if (n_traj < 1) fail("n_traj", "must be >= 1");
    if (dt * gamma > kMaxDecayPerStep) fail("dt", "dt * gamma must be <= 0.1");
}

std::string_view to_string(EventKind kind) {
    switch (kind) {
    case EventKind::fluctuation_no_jump: return "fluctuation_no_jump";
    case EventKind::quantum_jump: return "quantum_jump";
    case EventKind::photon_detection: return "photon_detection";
    case EventKind::step: return "step";
    }
    return "unknown";
}

EventKind parse_event_kind(std::string_view name) {
    if (name == "fluctuation_no_jump") return EventKind::fluctuation_no_jump;
    if (name == "quantum_jump") return EventKind::quantum_jump;
    if (name == "photon_detection") return EventKind::photon_detection;
    if (name == "step") return EventKind::step;
    throw Error(ErrorCode::SchemaMismatch, "kind: unknown value '" + std::string(name) + "'");
}

double occupation_at(const TrajectoryRecord& record, double t) {
    // Step events are stamped (k + 1) * dt, which may differ from a sampling
    // grid i * stride * dt by an ulp; treat such times as equal.
    const double slack = 1e-12 * std::max(1.0, std::abs(t));
    const auto it = std::upper_bound(record.events.begin(), record.events.end(), t + slack,
                                     [](double time, const Event& e) { return time < e.t; });
    if (it == record.events.begin()) return record.initial_occupation;
    return std::prev(it)->occupation_after;
}

} // namespace qdecay
