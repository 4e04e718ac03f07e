#include "qdecay/rabi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qdecay/parallel.hpp"

namespace qdecay::rabi {

namespace {
constexpr double kMaxDrivenStep = 0.05;

void insert_sorted(TrajectoryRecord& rec, const Event& e) {
    const auto it = std::upper_bound(rec.events.begin(), rec.events.end(), e.t,
                                     [](double t, const Event& ev) { return t < ev.t; });
    rec.events.insert(it, e);
}
} // namespace

void DriveParams::resolve() {
    if (omega_rabi < 0.0) throw Error(ErrorCode::InvalidParams, "omega_rabi: must be >= 0");
    if (dipole.has_value() != field.has_value()) {
        throw Error(ErrorCode::InvalidParams, "dipole/field: give both or neither");
    }
    if (!dipole) return;
    const double from_vectors = rabi_frequency(*dipole, *field);
    if (from_vectors < 0.0) {
        throw Error(ErrorCode::InvalidParams, "dipole/field: dipole . field must be >= 0");
    }
    if (omega_rabi == 0.0) {
        omega_rabi = from_vectors;
    } else if (std::abs(omega_rabi - from_vectors) > 1e-12 * std::max(1.0, omega_rabi)) {
        throw Error(ErrorCode::InvalidParams, "omega_rabi: inconsistent with dipole . field");
    }
}

double rabi_occupation_undamped(double omega_rabi, double t) {
    const double s = std::sin(omega_rabi * t);
    return s * s;
}

double rabi_frequency(const Vec3& dipole, const Vec3& field) {
    return dipole[0] * field[0] + dipole[1] * field[1] + dipole[2] * field[2];
}

double torrey_occupation(double omega_rabi, double gamma, double t) {
    if (!(omega_rabi > 0.0)) throw Error(ErrorCode::NonPositiveRate, "omega_rabi must be positive");
    if (gamma < 0.0) throw Error(ErrorCode::NonPositiveRate, "gamma must be >= 0");
    if (t < 0.0) throw Error(ErrorCode::NegativeTime, "t must be >= 0");
    const double wt = omega_rabi * t;
    const double n = 0.5 * (1.0 - (std::cos(wt) + gamma / (2.0 * omega_rabi) * std::sin(wt)) *
                                      std::exp(-0.5 * gamma * t));
    return std::clamp(n, 0.0, 1.0);
}

QubitState drive_rotation(const QubitState& state, double omega_rabi, double dt) {
    const double c = std::cos(0.5 * omega_rabi * dt);
    const Complex is(0.0, -std::sin(0.5 * omega_rabi * dt));
    return {c * state.excited + is * state.ground, is * state.excited + c * state.ground, state.photon_weight};
}

TrajectoryRecord run_driven_trajectory(const ModelParams& params, RngStream& stream,
                                       const TrajectoryOptions& options) {
    params.validate();
    const double dt = params.dt;
    if (dt * std::max(params.gamma, params.omega_rabi) > kMaxDrivenStep) {
        throw Error(ErrorCode::StepTooLarge, "dt * max(gamma, omega_rabi) must be <= 0.05");
    }
    if (options.initial.photon_weight != 0.0) {
        throw Error(ErrorCode::PhotonComponentPresent, "initial state must be two-level");
    }
    TrajectoryRecord rec;
    rec.traj_id = stream.stream_id();
    rec.initial_occupation = occupation(options.initial);

    const double gamma = params.gamma;
    const double emit_fraction = -std::expm1(-gamma * dt);
    const std::size_t n_steps = step_count(params);
    auto log_emission = [&](double t_emit, double occ_before) {
        insert_sorted(rec, {t_emit, EventKind::photon_detection, occ_before, 0.0, 0.0});
        if (!rec.decay_time) rec.decay_time = t_emit;
    };

    // For NSM `state` is the unnormalized no-photon branch; its missing weight is
    // the photon weight accumulated since the last fluctuation, tabulated per
    // step in `profile` (cumulative).
    QubitState state = normalize(options.initial);
    std::vector<double> profile;
    std::vector<double> profile_occ;
    double last_fluct = 0.0;
    double next_fluct = std::numeric_limits<double>::infinity();
    if (params.model == Model::nsm) {
        next_fluct = params.beta > 0.0 ? sample_fluctuation_gap(params.beta, stream)
                                       : std::numeric_limits<double>::infinity();
        rec.ill_defined_limit = params.beta == 0.0;
    }
    std::size_t profile_start = 0;

    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double t_end = t + dt;
        state = drive_rotation(state, params.omega_rabi, dt);

        switch (params.model) {
        case Model::qmop: {
            const double p = jump_probability(state, gamma, dt);
            const double u = stream.uniform_pos();
            if (u < p) {
                log_emission(t + (u / p) * dt, occupation(state));
                state = QubitState::ground_state();
            } else {
                state = qmop_propagate(state, params, dt);
            }
            break;
        }
        case Model::swf: {
            const SwfStep step = swf_step(state, params);
            if (stream.uniform_pos() < step.p_detect) {
                const double v = stream.uniform();
                const double offset = gamma > 0.0 ? -std::log1p(v * std::expm1(-gamma * dt)) / gamma : v * dt;
                log_emission(t + std::min(offset, dt), occupation(state));
                state = QubitState::ground_state();
            } else {
                state = normalize(QubitState{step.evolved.excited, step.evolved.ground, 0.0});
            }
            break;
        }
        case Model::nsm: {
            const double occ = std::norm(state.excited);
            const double emitted = occ * emit_fraction;
            state.excited *= std::exp(Complex(-0.5 * gamma * dt, -params.omega1 * dt));
            state.ground *= std::exp(Complex(0.0, -params.omega0 * dt));
            profile.push_back((profile.empty() ? 0.0 : profile.back()) + emitted);
            profile_occ.push_back(occ);
            // Fluctuations falling inside this step are resolved at its end.
            while (next_fluct <= t_end) {
                const double photon = profile.empty() ? 0.0 : profile.back();
                const double total = photon + state.two_level_weight();
                const double gap = next_fluct - last_fluct;
                const double occ_before = std::norm(state.excited) / total;
                if (photon > 0.0 && stream.uniform_pos() * total <= photon) {
                    const double target = stream.uniform() * photon;
                    const auto it = std::upper_bound(profile.begin(), profile.end(), target);
                    const auto j = std::min<std::size_t>(static_cast<std::size_t>(it - profile.begin()),
                                                          profile.size() - 1);
                    const double step_t0 = static_cast<double>(profile_start + j) * dt;
                    const double t_emit = std::clamp(step_t0 + stream.uniform() * dt, last_fluct, next_fluct);
                    log_emission(t_emit, profile_occ[j]);
                    rec.events.push_back({next_fluct, EventKind::quantum_jump, occ_before, 0.0, gap});
                    if (!rec.jump_time) rec.jump_time = next_fluct;
                    state = QubitState::ground_state();
                } else {
                    state = normalize(QubitState{state.excited, state.ground, 0.0});
                    rec.events.push_back(
                        {next_fluct, EventKind::fluctuation_no_jump, occ_before, occupation(state), gap});
                }
                profile.clear();
                profile_occ.clear();
                profile_start = k + 1;
                last_fluct = next_fluct;
                next_fluct += sample_fluctuation_gap(params.beta, stream);
            }
            break;
        }
        }

        if (options.record_stride != 0 && (k + 1) % options.record_stride == 0) {
            rec.events.push_back({t_end, EventKind::step, occupation(state), occupation(state), 0.0});
        }
    }
    return rec;
}

std::vector<TrajectoryRecord> run_driven_ensemble(const ModelParams& params, const TrajectoryOptions& options,
                                                  unsigned threads) {
    params.validate();
    return parallel_map(params.n_traj, threads, [&](std::uint64_t id) {
        RngStream stream = derive_stream(params.seed, id);
        return run_driven_trajectory(params, stream, options);
    });
}

FluorescenceSeries fluorescence_intensity(const std::vector<TrajectoryRecord>& ensemble, double t_max,
                                          double bin_width) {
    if (ensemble.empty()) throw Error(ErrorCode::EmptyEnsemble, "no trajectories");
    if (!(bin_width > 0.0) || !(t_max > 0.0)) throw Error(ErrorCode::BadRange, "bin_width and t_max must be positive");
    const auto n_bins = static_cast<std::size_t>(std::ceil(t_max / bin_width - 1e-9));
    std::vector<std::uint64_t> counts(n_bins, 0);
    for (const auto& rec : ensemble) {
        for (const Event& e : rec.events) {
            if (e.kind != EventKind::photon_detection || e.t < 0.0 || e.t > t_max) continue;
            const auto bin = std::min(static_cast<std::size_t>(e.t / bin_width), n_bins - 1);
            ++counts[bin];
        }
    }
    const double norm = static_cast<double>(ensemble.size()) * bin_width;
    FluorescenceSeries out;
    for (std::size_t i = 0; i < n_bins; ++i) {
        out.bin_centers.push_back((static_cast<double>(i) + 0.5) * bin_width);
        out.intensity.push_back(static_cast<double>(counts[i]) / norm);
        out.se.push_back(std::sqrt(static_cast<double>(counts[i])) / norm);
    }
    return out;
}

MeanCurve mean_occupation(const std::vector<TrajectoryRecord>& ensemble, const std::vector<double>& times) {
    if (ensemble.empty()) throw Error(ErrorCode::EmptyEnsemble, "no trajectories");
    MeanCurve out;
    out.times = times;
    const auto n = static_cast<double>(ensemble.size());
    for (double t : times) {
        double sum = 0.0;
        double sum_sq = 0.0;
        for (const auto& rec : ensemble) {
            const double occ = occupation_at(rec, t);
            sum += occ;
            sum_sq += occ * occ;
        }
        const double mean = sum / n;
        const double var = n > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
        out.mean.push_back(mean);
        out.se.push_back(std::sqrt(var / n));
    }
    return out;
}

DropHistogram fluorescence_fluctuation_histogram(const std::vector<TrajectoryRecord>& ensemble, Model model,
                                                 double gamma, double beta, double bin_width) {
    if (model != Model::nsm) throw Error(ErrorCode::WrongModel, "drop histogram needs the nsm model");
    if (ensemble.empty()) throw Error(ErrorCode::EmptyEnsemble, "no trajectories");
    if (!(bin_width > 0.0) || bin_width > 1.0) throw Error(ErrorCode::BadRange, "bin_width must lie in (0, 1]");
    const auto n_bins = static_cast<std::size_t>(std::llround(1.0 / bin_width));
    const std::vector<double> drops = occupation_drops(ensemble, gamma);
    DropHistogram out{stats::histogram(drops, 0.0, 1.0, std::max<std::size_t>(n_bins, 1)), {}};
    const double r = gamma > 0.0 ? beta / gamma : 0.0;
    for (std::size_t i = 0; i < out.histogram.counts.size(); ++i) {
        out.density_analytic.push_back(density_Da(r, out.histogram.bin_center(i)));
    }
    return out;
}

} // namespace qdecay::rabi
