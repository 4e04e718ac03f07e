#pragma once

#include <array>
#include <optional>
#include <vector>

#include "qdecay/core.hpp"
#include "qdecay/models.hpp"
#include "qdecay/stats.hpp"

namespace qdecay::rabi {

using Vec3 = std::array<double, 3>;

struct DriveParams {
    double omega_rabi = 0.0;
    std::optional<Vec3> dipole;
    std::optional<Vec3> field;

    // Fills omega_rabi from dipole . field when both vectors are present and
    // omega_rabi was left at 0; otherwise enforces the two agree.
    void resolve();
};

// sin^2(omega_rabi t), the undamped population for n(0) = 0.
double rabi_occupation_undamped(double omega_rabi, double t);

// e mu . E0 with the charge folded to 1.
double rabi_frequency(const Vec3& dipole, const Vec3& field);

// 1/2 [1 - (cos(W t) + (Gamma / 2W) sin(W t)) e^{-Gamma t / 2}], clamped to [0, 1].
double torrey_occupation(double omega_rabi, double gamma, double t);

// Resonant drive rotation exp(-i (W/2) sigma_x dt) on the two-level amplitudes.
QubitState drive_rotation(const QubitState& state, double omega_rabi, double dt);

// Driven trajectory: rotation then the model's decay step every dt. Emissions
// are logged as photon_detection and the atom restarts from the ground state.
// For NSM, fluctuation events are logged too and the emission instant is drawn
// from the photon-weight profile accumulated since the previous fluctuation.
// Requires dt * max(gamma, omega_rabi) <= 0.05.
TrajectoryRecord run_driven_trajectory(const ModelParams& params, RngStream& stream,
                                       const TrajectoryOptions& options = {.initial = QubitState::ground_state(),
                                                                           .record_stride = 0});

std::vector<TrajectoryRecord> run_driven_ensemble(const ModelParams& params, const TrajectoryOptions& options,
                                                  unsigned threads = 1);

struct FluorescenceSeries {
    std::vector<double> bin_centers;
    std::vector<double> intensity;
    std::vector<double> se;
};

// Emission counts per bin over [0, t_max], divided by n_traj * bin_width.
FluorescenceSeries fluorescence_intensity(const std::vector<TrajectoryRecord>& ensemble, double t_max,
                                          double bin_width);

struct MeanCurve {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> se;
};

// Ensemble mean and standard error of occupation_at(record, t) on a grid.
MeanCurve mean_occupation(const std::vector<TrajectoryRecord>& ensemble, const std::vector<double>& times);

struct DropHistogram {
    stats::Histogram histogram;
    std::vector<double> density_analytic;
};

// Occupation drops a = 1 - e^{-Gamma gap} over every fluctuation of a driven
// NSM ensemble, binned on (0, 1) and paired with D(a) at the bin centres.
DropHistogram fluorescence_fluctuation_histogram(const std::vector<TrajectoryRecord>& ensemble, Model model,
                                                 double gamma, double beta, double bin_width = 0.05);

} // namespace qdecay::rabi
