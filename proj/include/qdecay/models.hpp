#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "qdecay/core.hpp"

namespace qdecay {

struct UnitaryWeights {
    double excited = 1.0;
    double continuum = 0.0;
};

// Probability that an excited atom has not decayed by time t.
double survival_probability(double gamma, double t);

// (|C1(t)|^2, integrated continuum weight) of the freely evolving resonance.
UnitaryWeights unitary_weights(double gamma, double t);

// No-jump evolution over time t with the non-Hermitian propagator followed by
// renormalization. Requires a two-level state (photon_weight == 0).
QubitState qmop_propagate(const QubitState& state, const ModelParams& params, double t);

// |c_e|^2 * gamma * dt, the conditional jump probability for one step.
double jump_probability(const QubitState& state, double gamma, double dt);

struct TrajectoryOptions {
    QubitState initial = QubitState::excited_state();
    // Emit a `step` event every record_stride steps (0 disables them).
    std::size_t record_stride = 0;
};

// Number of dt steps that cover [0, t_max].
std::size_t step_count(const ModelParams& params);

TrajectoryRecord run_qmop_trajectory(const ModelParams& params, RngStream& stream,
                                     const TrajectoryOptions& options = {});

// One SWF interval: the state evolved with the Eq.-(1) strengths (photon
// weight populated, not renormalized) and the resulting detection probability.
struct SwfStep {
    QubitState evolved;
    double p_detect = 0.0;
};

SwfStep swf_step(const QubitState& state, const ModelParams& params);

TrajectoryRecord run_swf_trajectory(const ModelParams& params, RngStream& stream,
                                    const TrajectoryOptions& options = {});

// Exp(beta) waiting time between vacuum fluctuations. A zero gap (u == 1)
// is redrawn.
double sample_fluctuation_gap(double beta, RngStream& stream);
double sample_fluctuation_gap(double beta, const std::function<double()>& uniform_pos);

// Returns the time until the next fluctuation. The default source is the
// Poisson process of rate beta; tests inject deterministic grids.
using FluctuationSource = std::function<double(RngStream&)>;

FluctuationSource poisson_fluctuations(double beta);
FluctuationSource fluctuation_grid(double spacing);

TrajectoryRecord run_nsm_trajectory(const ModelParams& params, RngStream& stream,
                                    const TrajectoryOptions& options = {},
                                    const FluctuationSource& source = {});

TrajectoryRecord run_trajectory(const ModelParams& params, RngStream& stream,
                                const TrajectoryOptions& options = {});

// Runs params.n_traj trajectories with streams derive_stream(params.seed, id).
std::vector<TrajectoryRecord> run_decay_ensemble(const ModelParams& params,
                                                 const TrajectoryOptions& options = {},
                                                 unsigned threads = 1);

double density_Df(double beta, double tau);
double density_Da(double r, double a);

struct MomentsA {
    double mean_a = 1.0;
    double std_a = 0.0;
    double r = 0.0;
};

MomentsA moments_a(double gamma, double beta);

enum class NsmOutcome { reset_to_excited, jump_to_ground };

struct NsmEvent {
    double t = 0.0;
    double gap = 0.0;
    double a_before = 0.0;
    NsmOutcome outcome = NsmOutcome::reset_to_excited;
};

// Fluctuation events (both outcomes) of an NSM record.
std::vector<NsmEvent> nsm_events(const TrajectoryRecord& record, double gamma);

// Pooled occupation drops a over every fluctuation in the ensemble.
std::vector<double> occupation_drops(const std::vector<TrajectoryRecord>& records, double gamma);

std::vector<double> decay_times(const std::vector<TrajectoryRecord>& records);

} // namespace qdecay
