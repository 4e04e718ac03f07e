#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "qdecay/core.hpp"
#include "qdecay/stats.hpp"

namespace qdecay::homodyne {

struct FieldPair {
    Complex phi1;
    Complex phi2;
};

// Balanced beam splitter: (alpha + psi) / sqrt 2 and (alpha - psi) / sqrt 2.
FieldPair beamsplitter_mix(Complex alpha, Complex psi);

// |alpha| * 2 Re(e^{i theta} c_g^* c_e): the qubit mode is identified with the
// lowering action on the two-level dipole, so theta = 0 reads |alpha| <sigma_x>.
double homodyne_current(const QubitState& state, double alpha_mag, double theta);

// Qubit amplitudes with an explicit one-photon branch: C_e|e> + C_g|g> + C_2|g>|E>.
struct DetectionState {
    Complex excited;
    Complex ground;
    Complex photon;

    double norm2() const { return std::norm(excited) + std::norm(ground) + std::norm(photon); }
};

// Exact single absorption: normalize(state + (C_g / alpha)|g>).
DetectionState apply_detection_exact(const DetectionState& state, double alpha_mag);

// First-order expansion in r = C_g / alpha, without normalization:
// state - r C_g^* (C_e|e> + C_2|g,E>) + r (1 - |C_g|^2)|g>.
// Reduces to the real-coefficient form when C_g is real. Requires |r| <= 0.1.
DetectionState apply_detection_first_order(const DetectionState& state, double alpha_mag);

// Basis order (e, g).
struct DensityMatrix2 {
    double rho_ee = 1.0;
    double rho_gg = 0.0;
    Complex rho_eg{0.0, 0.0};

    static DensityMatrix2 from_state(const QubitState& state);
    double trace() const { return rho_ee + rho_gg; }
    double sigma_x() const { return 2.0 * rho_eg.real(); }
    // Throws InvalidDensity when trace, positivity or finiteness fail.
    void validate() const;
};

// dW (a rho + rho a^+ - Tr(a rho + rho a^+) rho) with a = |g><e|. Traceless for a
// unit-trace input.
DensityMatrix2 back_action_delta(const DensityMatrix2& rho, double dW);

// rho + delta, projected back onto the physical set (Bloch vector clipped to
// the unit ball, trace reset to 1) when the kick leaves it. Requires |dW| <= 0.1.
DensityMatrix2 back_action_step(const DensityMatrix2& rho, double dW);

// Non-Hermitian no-jump drift of rho over dt, renormalized.
DensityMatrix2 no_jump_drift(const DensityMatrix2& rho, double gamma, double omega0, double omega1,
                             double dt);

enum class NoiseModel { white, nsm_point_process };

std::string_view to_string(NoiseModel model);
NoiseModel parse_noise_model(std::string_view name);

struct HomodyneParams {
    double gamma = 0.01;
    double omega0 = 0.0;
    double omega1 = 0.0;
    double dt = 1e-3;
    double t_max = 1.0;
    double theta = 0.0;
    NoiseModel noise = NoiseModel::white;
    // Overall noise scale; 0 switches the noise off. Variance per step is
    // noise_scale^2 * dt for both models.
    double noise_scale = 1.0;
    // Point-process kick size and rate; a kick of 0 picks 1/sqrt(beta) so the
    // per-step variance matches the white model.
    double beta = 100.0;
    double kappa = 0.0;
    QubitState initial = QubitState::excited_state();

    void validate() const;
    double effective_kappa() const;
};

struct HomodyneRecord {
    std::uint64_t traj_id = 0;
    double dt = 0.0;
    std::vector<double> times;
    std::vector<double> current;
    std::vector<double> sigma_x;
    // Drift part of the current: 2 Re(e^{i theta} rho_eg).
    std::vector<double> quadrature;
    NoiseModel noise_model = NoiseModel::white;
    std::uint64_t kick_count = 0;
    // t_max is not small against the lifetime 1/gamma.
    bool lifetime_warning = false;
};

// Per step: current = quadrature(theta) + dW / dt, then rho follows the no-jump
// drift and back-action with the same dW.
HomodyneRecord run_homodyne_trajectory(const HomodyneParams& params, RngStream& stream);

std::vector<HomodyneRecord> run_homodyne_ensemble(const HomodyneParams& params, std::uint64_t n_traj,
                                                  std::uint64_t seed, unsigned threads = 1);

// Noise increments dW = (current - quadrature) * dt of a record.
std::vector<double> noise_increments(const HomodyneRecord& record);

// Autocorrelation of the currents across the ensemble (lags in steps).
stats::Autocorrelation signal_autocorrelation(const std::vector<HomodyneRecord>& records,
                                              std::size_t max_lag);

} // namespace qdecay::homodyne
