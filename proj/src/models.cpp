#include "qdecay/models.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "qdecay/parallel.hpp"

namespace qdecay {

namespace {

void require_time(double t) {
    if (t < 0.0 || !std::isfinite(t)) {
        throw Error(ErrorCode::NegativeTime, "t = " + std::to_string(t));
    }
}

void require_model(const ModelParams& params, Model expected) {
    params.validate();
    if (params.model != expected) {
        throw Error(ErrorCode::WrongModel, "engine for " + std::string(to_string(expected)) +
                                                " called with model " + std::string(to_string(params.model)));
    }
}

// Offset in (0, width) drawn from the Eq.-(1) emission profile Gamma e^{-Gamma s}
// truncated to the interval.
double emission_offset(double gamma, double width, RngStream& stream) {
    const double v = stream.uniform();
    if (gamma * width < 1e-300) return v * width;
    const double s = -std::log1p(v * std::expm1(-gamma * width)) / gamma;
    return std::min(s, width);
}

void push_step(TrajectoryRecord& rec, double t, double occ) {
    rec.events.push_back({t, EventKind::step, occ, occ, 0.0});
}

TrajectoryRecord begin_record(const RngStream& stream, const TrajectoryOptions& options) {
    TrajectoryRecord rec;
    rec.traj_id = stream.stream_id();
    rec.initial_occupation = occupation(options.initial);
    return rec;
}

QubitState checked_initial(const TrajectoryOptions& options) {
    if (options.initial.photon_weight != 0.0) {
        throw Error(ErrorCode::PhotonComponentPresent, "initial state must be two-level");
    }
    return normalize(options.initial);
}

} // namespace

double survival_probability(double gamma, double t) {
    require_time(t);
    return std::exp(-gamma * t);
}

UnitaryWeights unitary_weights(double gamma, double t) {
    require_time(t);
    const double excited = std::exp(-gamma * t);
    return {excited, 1.0 - excited};
}

QubitState qmop_propagate(const QubitState& state, const ModelParams& params, double t) {
    require_time(t);
    if (state.photon_weight != 0.0) {
        throw Error(ErrorCode::PhotonComponentPresent, "qmop_propagate needs photon_weight == 0");
    }
    const Complex decay = std::exp(Complex(-0.5 * params.gamma * t, -params.omega1 * t));
    const Complex c1 = state.excited * decay;
    const Complex c0 = state.ground * std::exp(Complex(0.0, -params.omega0 * t));
    const double n2 = std::norm(c0) + std::norm(c1);
    if (n2 < 1e-300) throw Error(ErrorCode::ZeroNorm, "no-jump branch vanished");
    const double inv = 1.0 / std::sqrt(n2);
    return {c1 * inv, c0 * inv, 0.0};
}

double jump_probability(const QubitState& state, double gamma, double dt) {
    if (gamma * dt > kMaxDecayPerStep) {
        throw Error(ErrorCode::StepTooLarge, "gamma * dt = " + std::to_string(gamma * dt));
    }
    return occupation(state) * gamma * dt;
}

std::size_t step_count(const ModelParams& params) {
    return static_cast<std::size_t>(std::ceil(params.t_max / params.dt - 1e-9));
}

TrajectoryRecord run_qmop_trajectory(const ModelParams& params, RngStream& stream,
                                     const TrajectoryOptions& options) {
    require_model(params, Model::qmop);
    TrajectoryRecord rec = begin_record(stream, options);
    QubitState state = checked_initial(options);
    const std::size_t n_steps = step_count(params);
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * params.dt;
        const double p = jump_probability(state, params.gamma, params.dt);
        const double u = stream.uniform_pos();
        if (u < p) {
            // Given u < p, u / p is uniform on (0, 1): reuse it for the
            // jump instant inside the step.
            const double t_jump = t + (u / p) * params.dt;
            rec.events.push_back({t_jump, EventKind::quantum_jump, occupation(state), 0.0, 0.0});
            rec.decay_time = t_jump;
            rec.jump_time = t_jump;
            return rec;
        }
        state = qmop_propagate(state, params, params.dt);
        if (options.record_stride != 0 && (k + 1) % options.record_stride == 0) {
            push_step(rec, static_cast<double>(k + 1) * params.dt, occupation(state));
        }
    }
    return rec;
}

SwfStep swf_step(const QubitState& state, const ModelParams& params) {
    if (state.photon_weight != 0.0) {
        throw Error(ErrorCode::PhotonComponentPresent, "swf_step needs photon_weight == 0");
    }
    const double dt = params.dt;
    SwfStep out;
    out.evolved.excited = state.excited * std::exp(Complex(-0.5 * params.gamma * dt, -params.omega1 * dt));
    out.evolved.ground = state.ground * std::exp(Complex(0.0, -params.omega0 * dt));
    out.evolved.photon_weight = -std::norm(state.excited) * std::expm1(-params.gamma * dt);
    out.p_detect = out.evolved.photon_weight / out.evolved.total_weight();
    return out;
}

TrajectoryRecord run_swf_trajectory(const ModelParams& params, RngStream& stream,
                                    const TrajectoryOptions& options) {
    require_model(params, Model::swf);
    TrajectoryRecord rec = begin_record(stream, options);
    QubitState state = checked_initial(options);
    const std::size_t n_steps = step_count(params);
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * params.dt;
        const SwfStep step = swf_step(state, params);
        if (stream.uniform_pos() < step.p_detect) {
            const double t_meas = t + params.dt;
            rec.events.push_back({t_meas, EventKind::photon_detection, occupation(state), 0.0, 0.0});
            rec.decay_time = t + emission_offset(params.gamma, params.dt, stream);
            rec.jump_time = t_meas;
            return rec;
        }
        // Born rule on the no-photon outcome: renormalize the two-level part.
        state = normalize(QubitState{step.evolved.excited, step.evolved.ground, 0.0});
        if (options.record_stride != 0 && (k + 1) % options.record_stride == 0) {
            push_step(rec, static_cast<double>(k + 1) * params.dt, occupation(state));
        }
    }
    return rec;
}

double sample_fluctuation_gap(double beta, const std::function<double()>& uniform_pos) {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw Error(ErrorCode::NonPositiveRate, "beta must be positive");
    }
    for (;;) {
        const double gap = -std::log(uniform_pos()) / beta;
        if (gap > 0.0) return gap;
    }
}

double sample_fluctuation_gap(double beta, RngStream& stream) {
    return sample_fluctuation_gap(beta, [&stream] { return stream.uniform_pos(); });
}

FluctuationSource poisson_fluctuations(double beta) {
    if (beta == 0.0) {
        return [](RngStream&) { return std::numeric_limits<double>::infinity(); };
    }
    if (!(beta > 0.0)) throw Error(ErrorCode::NonPositiveRate, "beta must be >= 0");
    return [beta](RngStream& stream) { return sample_fluctuation_gap(beta, stream); };
}

FluctuationSource fluctuation_grid(double spacing) {
    if (!(spacing > 0.0)) throw Error(ErrorCode::NonPositiveRate, "grid spacing must be positive");
    return [spacing](RngStream&) { return spacing; };
}

TrajectoryRecord run_nsm_trajectory(const ModelParams& params, RngStream& stream,
                                    const TrajectoryOptions& options, const FluctuationSource& source) {
    require_model(params, Model::nsm);
    const FluctuationSource next_gap = source ? source : poisson_fluctuations(params.beta);
    TrajectoryRecord rec = begin_record(stream, options);
    rec.ill_defined_limit = !source && params.beta == 0.0;

    const double gamma = params.gamma;
    const double grid = options.record_stride == 0
                            ? 0.0
                            : static_cast<double>(options.record_stride) * params.dt;
    std::size_t next_grid = 1;
    // Emit step samples of the freely evolving excited weight up to `until`.
    auto sample_until = [&](double t_reset, double excited0, double until) {
        if (grid == 0.0) return;
        for (;; ++next_grid) {
            const double tg = static_cast<double>(next_grid) * grid;
            if (tg > until + 1e-12 * grid || tg > params.t_max + 1e-12 * grid) return;
            push_step(rec, tg, excited0 * std::exp(-gamma * (tg - t_reset)));
        }
    };

    QubitState state = checked_initial(options);
    double t_reset = 0.0;
    for (;;) {
        const double gap = next_gap(stream);
        const double t_fluct = t_reset + gap;
        const double excited0 = std::norm(state.excited);
        if (!(t_fluct <= params.t_max)) {
            sample_until(t_reset, excited0, params.t_max);
            return rec;
        }
        // Steps that coincide with the fluctuation are sampled just before it.
        sample_until(t_reset, excited0, std::nextafter(t_fluct, 0.0));

        const double survive = std::exp(-gamma * gap);
        const double occ_before = excited0 * survive;
        const double photon = -excited0 * std::expm1(-gamma * gap);
        if (stream.uniform_pos() <= photon) {
            rec.events.push_back({t_fluct, EventKind::quantum_jump, occ_before, 0.0, gap});
            rec.decay_time = t_reset + emission_offset(gamma, gap, stream);
            rec.jump_time = t_fluct;
            return rec;
        }
        if (std::norm(state.ground) == 0.0) {
            // Reset to the bare excited state; the accumulated phase is dropped.
            state = QubitState::excited_state();
        } else {
            state = qmop_propagate(state, params, gap);
        }
        rec.events.push_back({t_fluct, EventKind::fluctuation_no_jump, occ_before, occupation(state), gap});
        t_reset = t_fluct;
    }
}

TrajectoryRecord run_trajectory(const ModelParams& params, RngStream& stream,
                                const TrajectoryOptions& options) {
    switch (params.model) {
    case Model::qmop: return run_qmop_trajectory(params, stream, options);
    case Model::swf: return run_swf_trajectory(params, stream, options);
    case Model::nsm: return run_nsm_trajectory(params, stream, options);
    }
    throw Error(ErrorCode::InvalidParams, "unknown model");
}

std::vector<TrajectoryRecord> run_decay_ensemble(const ModelParams& params,
                                                 const TrajectoryOptions& options, unsigned threads) {
    params.validate();
    return parallel_map(params.n_traj, threads, [&](std::uint64_t id) {
        RngStream stream = derive_stream(params.seed, id);
        return run_trajectory(params, stream, options);
    });
}

double density_Df(double beta, double tau) {
    if (!(beta > 0.0)) throw Error(ErrorCode::NonPositiveRate, "beta must be positive");
    if (tau > 0.0) throw Error(ErrorCode::PositiveTau, "tau must be <= 0");
    return beta * std::exp(beta * tau);
}

double density_Da(double r, double a) {
    if (!(a > 0.0 && a < 1.0)) throw Error(ErrorCode::OutOfRangeA, "a must lie in (0, 1)");
    if (r < 0.0) throw Error(ErrorCode::NonPositiveRate, "r must be >= 0");
    return r * std::pow(1.0 - a, r - 1.0);
}

MomentsA moments_a(double gamma, double beta) {
    if (!(gamma > 0.0)) throw Error(ErrorCode::NonPositiveGamma, "gamma must be positive");
    if (beta < 0.0) throw Error(ErrorCode::NonPositiveRate, "beta must be >= 0");
    MomentsA m;
    m.r = beta / gamma;
    if (std::isinf(m.r)) return {0.0, 0.0, m.r};
    m.mean_a = 1.0 / (1.0 + m.r);
    m.std_a = m.mean_a * std::sqrt(m.r / (2.0 + m.r));
    return m;
}

std::vector<NsmEvent> nsm_events(const TrajectoryRecord& record, double gamma) {
    std::vector<NsmEvent> out;
    for (const Event& e : record.events) {
        if (e.kind != EventKind::fluctuation_no_jump && e.kind != EventKind::quantum_jump) continue;
        out.push_back({e.t, e.gap, -std::expm1(-gamma * e.gap),
                       e.kind == EventKind::quantum_jump ? NsmOutcome::jump_to_ground
                                                         : NsmOutcome::reset_to_excited});
    }
    return out;
}

std::vector<double> occupation_drops(const std::vector<TrajectoryRecord>& records, double gamma) {
    std::vector<double> drops;
    for (const auto& rec : records) {
        for (const Event& e : rec.events) {
            if (e.gap > 0.0) drops.push_back(-std::expm1(-gamma * e.gap));
        }
    }
    return drops;
}

std::vector<double> decay_times(const std::vector<TrajectoryRecord>& records) {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        if (rec.decay_time) out.push_back(*rec.decay_time);
    }
    return out;
}

} // namespace qdecay
