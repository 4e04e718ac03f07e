#include "qdecay/homodyne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "qdecay/parallel.hpp"

namespace qdecay::homodyne {

namespace {
constexpr double kMaxKick = 0.1;
constexpr double kDensityTol = 1e-12;
} // namespace

FieldPair beamsplitter_mix(Complex alpha, Complex psi) {
    const double s = std::numbers::sqrt2 / 2.0;
    return {(alpha + psi) * s, (alpha - psi) * s};
}

double homodyne_current(const QubitState& state, double alpha_mag, double theta) {
    const Complex phase = std::polar(1.0, theta);
    return alpha_mag * 2.0 * (phase * std::conj(state.ground) * state.excited).real();
}

DetectionState apply_detection_exact(const DetectionState& state, double alpha_mag) {
    if (!(alpha_mag > 0.0)) throw Error(ErrorCode::NonPositiveAlpha, "alpha must be positive");
    DetectionState out = state;
    out.ground += state.ground / alpha_mag;
    const double n2 = out.norm2();
    if (n2 < 1e-300) throw Error(ErrorCode::ZeroNorm, "detected state vanished");
    const double inv = 1.0 / std::sqrt(n2);
    out.excited *= inv;
    out.ground *= inv;
    out.photon *= inv;
    return out;
}

DetectionState apply_detection_first_order(const DetectionState& state, double alpha_mag) {
    if (!(alpha_mag > 0.0)) throw Error(ErrorCode::NonPositiveAlpha, "alpha must be positive");
    const Complex r = state.ground / alpha_mag;
    if (std::abs(r) > 0.1) {
        throw Error(ErrorCode::RTooLarge, "|C_g / alpha| = " + std::to_string(std::abs(r)));
    }
    const Complex shrink = r * std::conj(state.ground);
    return {state.excited - shrink * state.excited,
            state.ground + r * (1.0 - std::norm(state.ground)),
            state.photon - shrink * state.photon};
}

DensityMatrix2 DensityMatrix2::from_state(const QubitState& state) {
    const QubitState s = normalize(QubitState{state.excited, state.ground, 0.0});
    return {std::norm(s.excited), std::norm(s.ground), s.excited * std::conj(s.ground)};
}

void DensityMatrix2::validate() const {
    if (!std::isfinite(rho_ee) || !std::isfinite(rho_gg) || !std::isfinite(rho_eg.real()) ||
        !std::isfinite(rho_eg.imag())) {
        throw Error(ErrorCode::InvalidDensity, "non-finite entry");
    }
    if (std::abs(trace() - 1.0) > kDensityTol) {
        throw Error(ErrorCode::InvalidDensity, "trace " + std::to_string(trace()));
    }
    if (rho_ee < -kDensityTol || rho_gg < -kDensityTol) {
        throw Error(ErrorCode::InvalidDensity, "negative population");
    }
    if (std::norm(rho_eg) > rho_ee * rho_gg + kDensityTol) {
        throw Error(ErrorCode::InvalidDensity, "coherence exceeds populations");
    }
}

DensityMatrix2 back_action_delta(const DensityMatrix2& rho, double dW) {
    // M = a rho + rho a^+ has M_eg = M_ge = rho_ee, M_gg = 2 Re rho_eg, M_ee = 0.
    const double tr_m = 2.0 * rho.rho_eg.real();
    return {dW * (0.0 - tr_m * rho.rho_ee), dW * (tr_m - tr_m * rho.rho_gg),
            dW * (Complex(rho.rho_ee, 0.0) - tr_m * rho.rho_eg)};
}

DensityMatrix2 back_action_step(const DensityMatrix2& rho, double dW) {
    rho.validate();
    if (std::abs(dW) > kMaxKick) throw Error(ErrorCode::InvalidDensity, "|dW| > 0.1");
    const DensityMatrix2 d = back_action_delta(rho, dW);
    DensityMatrix2 out{rho.rho_ee + d.rho_ee, rho.rho_gg + d.rho_gg, rho.rho_eg + d.rho_eg};

    // Bloch vector (x, y, z) with rho = (I + r.sigma) / 2 in the (e, g) basis.
    const double tr = out.trace();
    double x = 2.0 * out.rho_eg.real() / tr;
    double y = -2.0 * out.rho_eg.imag() / tr;
    double z = (out.rho_ee - out.rho_gg) / tr;
    const double len = std::sqrt(x * x + y * y + z * z);
    if (len > 1.0) {
        x /= len;
        y /= len;
        z /= len;
    }
    return {0.5 * (1.0 + z), 0.5 * (1.0 - z), Complex(0.5 * x, -0.5 * y)};
}

DensityMatrix2 no_jump_drift(const DensityMatrix2& rho, double gamma, double omega0, double omega1,
                             double dt) {
    const Complex ke = std::exp(Complex(-0.5 * gamma * dt, -omega1 * dt));
    const Complex kg = std::exp(Complex(0.0, -omega0 * dt));
    const double ee = std::norm(ke) * rho.rho_ee;
    const double gg = rho.rho_gg;
    const double tr = ee + gg;
    if (tr < 1e-300) throw Error(ErrorCode::ZeroNorm, "no-jump branch vanished");
    return {ee / tr, gg / tr, ke * std::conj(kg) * rho.rho_eg / tr};
}

std::string_view to_string(NoiseModel model) {
    return model == NoiseModel::white ? "white" : "nsm_point_process";
}

NoiseModel parse_noise_model(std::string_view name) {
    if (name == "white") return NoiseModel::white;
    if (name == "nsm_point_process" || name == "nsm") return NoiseModel::nsm_point_process;
    throw Error(ErrorCode::InvalidParams, "noise: unknown value '" + std::string(name) + "'");
}

void HomodyneParams::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw Error(ErrorCode::InvalidParams, field + ": " + why);
    };
    for (auto [name, v] : {std::pair{"gamma", gamma}, {"omega0", omega0}, {"omega1", omega1}, {"dt", dt},
                           {"t_max", t_max}, {"theta", theta}, {"noise_scale", noise_scale},
                           {"beta", beta}, {"kappa", kappa}}) {
        if (!std::isfinite(v)) fail(name, "must be finite");
    }
    if (gamma < 0.0) fail("gamma", "must be >= 0");
    if (!(dt > 0.0)) fail("dt", "must be > 0");
    if (!(t_max > 0.0)) fail("t_max", "must be > 0");
    if (dt > t_max) fail("dt", "must not exceed t_max");
    if (noise_scale < 0.0) fail("noise_scale", "must be >= 0");
    if (kappa < 0.0) fail("kappa", "must be >= 0");
    if (noise == NoiseModel::nsm_point_process && !(beta > 0.0)) fail("beta", "must be > 0 for nsm noise");
    if (gamma * dt > kMaxDecayPerStep) fail("dt", "dt * gamma must be <= 0.1");
}

double HomodyneParams::effective_kappa() const {
    return kappa > 0.0 ? kappa : 1.0 / std::sqrt(beta);
}

namespace {

// Applies a back-action increment, split into pieces no larger than kMaxKick.
DensityMatrix2 kick(DensityMatrix2 rho, double dW) {
    const auto pieces = static_cast<int>(std::ceil(std::abs(dW) / kMaxKick));
    if (pieces <= 1) return back_action_step(rho, dW);
    const double part = dW / pieces;
    for (int i = 0; i < pieces; ++i) rho = back_action_step(rho, part);
    return rho;
}

double quadrature(const DensityMatrix2& rho, const Complex& phase) {
    return 2.0 * (phase * rho.rho_eg).real();
}

} // namespace

HomodyneRecord run_homodyne_trajectory(const HomodyneParams& params, RngStream& stream) {
    params.validate();
    HomodyneRecord rec;
    rec.traj_id = stream.stream_id();
    rec.dt = params.dt;
    rec.noise_model = params.noise;
    rec.lifetime_warning = params.gamma * params.t_max > 0.1;

    const auto n_steps = static_cast<std::size_t>(std::ceil(params.t_max / params.dt - 1e-9));
    rec.times.reserve(n_steps);
    rec.current.reserve(n_steps);
    rec.sigma_x.reserve(n_steps);
    rec.quadrature.reserve(n_steps);

    const Complex phase = std::polar(1.0, params.theta);
    const double sqrt_dt = std::sqrt(params.dt);
    const double kappa = params.effective_kappa();
    DensityMatrix2 rho = DensityMatrix2::from_state(params.initial);
    // Next point-process kick, measured from t = 0.
    double next_kick = params.noise == NoiseModel::nsm_point_process
                           ? stream.exponential(params.beta)
                           : std::numeric_limits<double>::infinity();

    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * params.dt;
        const double drift = quadrature(rho, phase);
        rec.times.push_back(t);
        rec.sigma_x.push_back(rho.sigma_x());
        rec.quadrature.push_back(drift);

        rho = no_jump_drift(rho, params.gamma, params.omega0, params.omega1, params.dt);
        double dW = 0.0;
        if (params.noise == NoiseModel::white) {
            dW = params.noise_scale * sqrt_dt * stream.normal();
            if (dW != 0.0) rho = kick(rho, dW);
        } else {
            const double t_end = t + params.dt;
            while (next_kick < t_end) {
                const double sign = stream.uniform() < 0.5 ? -1.0 : 1.0;
                const double one = params.noise_scale * sign * kappa;
                dW += one;
                ++rec.kick_count;
                if (one != 0.0) rho = kick(rho, one);
                next_kick += stream.exponential(params.beta);
            }
        }
        rec.current.push_back(drift + dW / params.dt);
    }
    return rec;
}

std::vector<HomodyneRecord> run_homodyne_ensemble(const HomodyneParams& params, std::uint64_t n_traj,
                                                  std::uint64_t seed, unsigned threads) {
    params.validate();
    if (n_traj < 1) throw Error(ErrorCode::InvalidParams, "n_traj: must be >= 1");
    return parallel_map(n_traj, threads, [&](std::uint64_t id) {
        RngStream stream = derive_stream(seed, id);
        return run_homodyne_trajectory(params, stream);
    });
}

std::vector<double> noise_increments(const HomodyneRecord& record) {
    std::vector<double> out(record.current.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (record.current[i] - record.quadrature[i]) * record.dt;
    }
    return out;
}

stats::Autocorrelation signal_autocorrelation(const std::vector<HomodyneRecord>& records,
                                              std::size_t max_lag) {
    if (records.empty()) throw Error(ErrorCode::SeriesTooShort, "no records");
    std::vector<std::vector<double>> series;
    series.reserve(records.size());
    for (const auto& r : records) series.push_back(r.current);
    return stats::autocorrelation(series, max_lag);
}

} // namespace qdecay::homodyne
