#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "qdecay/error.hpp"
#include "qdecay/rng.hpp"

namespace qdecay {

using Complex = std::complex<double>;

// Two-level amplitudes plus the total weight of the ground+photon continuum.
// The photon spectral shape is never needed, only its integrated weight.
struct QubitState {
    Complex excited{1.0, 0.0};
    Complex ground{0.0, 0.0};
    double photon_weight = 0.0;

    static QubitState excited_state() { return {{1.0, 0.0}, {0.0, 0.0}, 0.0}; }
    static QubitState ground_state() { return {{0.0, 0.0}, {1.0, 0.0}, 0.0}; }

    double total_weight() const {
        return std::norm(excited) + std::norm(ground) + photon_weight;
    }
    double two_level_weight() const { return std::norm(excited) + std::norm(ground); }

    bool operator==(const QubitState&) const = default;
};

// Rescales so that |c_e|^2 + |c_g|^2 + w = 1. A state already normalized to
// within a few ulp is returned untouched, which makes the map idempotent.
QubitState normalize(const QubitState& state);

double occupation(const QubitState& state);

// 2 Re(c_g^* c_e) evaluated on the renormalized two-level subspace.
double sigma_x_expectation(const QubitState& state);

RngStream derive_stream(std::uint64_t root_seed, std::uint64_t traj_id);

double photon_packet_length(double gamma, double c_light);

enum class Model { qmop, swf, nsm };

std::string_view to_string(Model model);
Model parse_model(std::string_view name);

struct ModelParams {
    double gamma = 1.0;
    double beta = 0.0;
    double omega0 = 0.0;
    double omega1 = 0.0;
    double omega_rabi = 0.0;
    double dt = 0.01;
    double t_max = 20.0;
    std::uint64_t n_traj = 1000;
    std::uint64_t seed = 0;
    Model model = Model::qmop;

    // Throws Error(InvalidParams) naming the offending field.
    void validate() const;
};

// Upper bound on gamma * dt accepted by validate().
inline constexpr double kMaxDecayPerStep = 0.1;

enum class EventKind { fluctuation_no_jump, quantum_jump, photon_detection, step };

std::string_view to_string(EventKind kind);
EventKind parse_event_kind(std::string_view name);

struct Event {
    double t = 0.0;
    EventKind kind = EventKind::step;
    double occupation_before = 0.0;
    double occupation_after = 0.0;
    // Time since the previous vacuum fluctuation; only set by the NSM engines.
    double gap = 0.0;
};

struct TrajectoryRecord {
    std::uint64_t traj_id = 0;
    double initial_occupation = 1.0;
    std::vector<Event> events;
    // Emission time of the photon (the time a distant detector would stamp
    // after subtracting the flight time).
    std::optional<double> decay_time;
    // Time of the reduction itself: the jump instant for QMOP, the gedanken
    // measurement instant for SWF, the vacuum fluctuation for NSM.
    std::optional<double> jump_time;
    // NSM with beta = 0: the state drains into the continuum without ever
    // reducing.
    bool ill_defined_limit = false;
};

// Occupation carried by the record at time t: the occupation_after of the
// last event at or before t (up to rounding of the time stamps), or the initial occupation before any event.
double occupation_at(const TrajectoryRecord& record, double t);

} // namespace qdecay
