#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qdecay/core.hpp"
#include "qdecay/error.hpp"
#include "qdecay/homodyne.hpp"
#include "qdecay/models.hpp"
#include "qdecay/rabi.hpp"
#include "qdecay/rng.hpp"
#include "qdecay/stats.hpp"

namespace py = pybind11;
using namespace qdecay;

namespace {

ModelParams make_params(const std::string& model, double gamma, double beta, double dt, double t_max,
                        std::uint64_t n_traj, std::uint64_t seed, double omega0, double omega1,
                        double omega_rabi) {
    ModelParams p;
    p.model = parse_model(model);
    p.gamma = gamma;
    p.beta = beta;
    p.dt = dt;
    p.t_max = t_max;
    p.n_traj = n_traj;
    p.seed = seed;
    p.omega0 = omega0;
    p.omega1 = omega1;
    p.omega_rabi = omega_rabi;
    p.validate();
    return p;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Monte Carlo quantum-trajectory simulator for spontaneous decay";

    // Messages start with the error code name, e.g. "ZeroNorm: ...".
    py::register_exception<Error>(m, "QdecayError", PyExc_ValueError);

    py::class_<QubitState>(m, "QubitState")
        .def(py::init<Complex, Complex, double>(), py::arg("excited") = Complex(1.0, 0.0),
             py::arg("ground") = Complex(0.0, 0.0), py::arg("photon_weight") = 0.0)
        .def_readwrite("excited", &QubitState::excited)
        .def_readwrite("ground", &QubitState::ground)
        .def_readwrite("photon_weight", &QubitState::photon_weight)
        .def_static("excited_state", &QubitState::excited_state)
        .def_static("ground_state", &QubitState::ground_state)
        .def("total_weight", &QubitState::total_weight)
        .def("__repr__", [](const QubitState& s) {
            return "QubitState(" + py::repr(py::cast(s.excited)).cast<std::string>() + ", " +
                   py::repr(py::cast(s.ground)).cast<std::string>() + ", " + std::to_string(s.photon_weight) + ")";
        });

    m.def("normalize", &normalize, py::arg("state"));
    m.def("occupation", &occupation, py::arg("state"));
    m.def("sigma_x_expectation", &sigma_x_expectation, py::arg("state"));
    m.def("survival_probability", &survival_probability, py::arg("gamma"), py::arg("t"));
    m.def("photon_packet_length", &photon_packet_length, py::arg("gamma"), py::arg("c_light") = 1.0);

    py::class_<RngStream>(m, "RngStream")
        .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("root_seed"), py::arg("stream_id"))
        .def("uniform", &RngStream::uniform)
        .def("normal", &RngStream::normal)
        .def("exponential", &RngStream::exponential, py::arg("rate"))
        .def("next_u64", &RngStream::next_u64);

    py::class_<Event>(m, "Event")
        .def_readonly("t", &Event::t)
        .def_property_readonly("kind", [](const Event& e) { return std::string(to_string(e.kind)); })
        .def_readonly("occupation_before", &Event::occupation_before)
        .def_readonly("occupation_after", &Event::occupation_after)
        .def_readonly("gap", &Event::gap);

    py::class_<TrajectoryRecord>(m, "TrajectoryRecord")
        .def_readonly("traj_id", &TrajectoryRecord::traj_id)
        .def_readonly("initial_occupation", &TrajectoryRecord::initial_occupation)
        .def_readonly("events", &TrajectoryRecord::events)
        .def_readonly("decay_time", &TrajectoryRecord::decay_time)
        .def_readonly("jump_time", &TrajectoryRecord::jump_time)
        .def_readonly("ill_defined_limit", &TrajectoryRecord::ill_defined_limit)
        .def("occupation_at", &occupation_at, py::arg("t"));

    m.def(
        "run_decay",
        [](const std::string& model, double gamma, double beta, double dt, double t_max, std::uint64_t n_traj,
           std::uint64_t seed, std::size_t record_stride, unsigned threads, double omega0, double omega1) {
            const auto p = make_params(model, gamma, beta, dt, t_max, n_traj, seed, omega0, omega1, 0.0);
            TrajectoryOptions opts;
            opts.record_stride = record_stride;
            py::gil_scoped_release release;
            return run_decay_ensemble(p, opts, threads);
        },
        py::arg("model"), py::arg("gamma") = 1.0, py::arg("beta") = 0.0, py::arg("dt") = 0.01,
        py::arg("t_max") = 20.0, py::arg("n_traj") = 1000, py::arg("seed") = 0, py::arg("record_stride") = 0,
        py::arg("threads") = 1, py::arg("omega0") = 0.0, py::arg("omega1") = 0.0,
        "Spontaneous-decay ensemble for model 'qmop', 'swf' or 'nsm'.");
    m.def("decay_times", &decay_times, py::arg("records"));
    m.def("occupation_drops", &occupation_drops, py::arg("records"), py::arg("gamma"));
    m.def("density_Da", &density_Da, py::arg("r"), py::arg("a"));
    m.def("density_Df", &density_Df, py::arg("beta"), py::arg("tau"));
    m.def(
        "moments_a",
        [](double gamma, double beta) {
            const auto mo = moments_a(gamma, beta);
            return py::dict(py::arg("mean_a") = mo.mean_a, py::arg("std_a") = mo.std_a, py::arg("r") = mo.r);
        },
        py::arg("gamma"), py::arg("beta"));

    auto st = m.def_submodule("stats", "Statistics helpers");
    st.def(
        "ks_exponential",
        [](const std::vector<double>& samples, double rate) {
            return stats::ks_distance(samples, [rate](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-rate * x); });
        },
        py::arg("samples"), py::arg("rate"), "KS distance of samples against Exp(rate).");
    st.def(
        "ks_distance",
        [](const std::vector<double>& samples, const std::function<double(double)>& cdf) {
            return stats::ks_distance(samples, cdf);
        },
        py::arg("samples"), py::arg("cdf"));
    st.def("ks_threshold", &stats::ks_threshold, py::arg("n"));
    st.def(
        "histogram",
        [](const std::vector<double>& samples, double lo, double hi, std::size_t n_bins) {
            const auto h = stats::histogram(samples, lo, hi, n_bins);
            return py::dict(py::arg("counts") = h.counts, py::arg("underflow") = h.underflow,
                            py::arg("overflow") = h.overflow);
        },
        py::arg("samples"), py::arg("lo"), py::arg("hi"), py::arg("n_bins"));
    st.def(
        "excess_kurtosis",
        [](const std::vector<double>& samples) {
            const auto k = stats::excess_kurtosis(samples);
            return py::make_tuple(k.value, k.se);
        },
        py::arg("samples"));
    st.def(
        "chi_square",
        [](const std::vector<std::uint64_t>& observed, const std::vector<double>& expected) {
            const auto c = stats::chi_square(observed, expected);
            return py::dict(py::arg("statistic") = c.statistic, py::arg("dof") = c.dof,
                            py::arg("p_value") = c.p_value);
        },
        py::arg("observed"), py::arg("expected"));
    st.def(
        "autocorrelation",
        [](const std::vector<std::vector<double>>& series, std::size_t max_lag) {
            const auto ac = stats::autocorrelation(series, max_lag);
            return py::make_tuple(ac.zeta, ac.se);
        },
        py::arg("series"), py::arg("max_lag"));

    auto hd = m.def_submodule("homodyne", "Balanced homodyne detection");
    py::class_<homodyne::HomodyneRecord>(hd, "HomodyneRecord")
        .def_readonly("traj_id", &homodyne::HomodyneRecord::traj_id)
        .def_readonly("dt", &homodyne::HomodyneRecord::dt)
        .def_readonly("times", &homodyne::HomodyneRecord::times)
        .def_readonly("current", &homodyne::HomodyneRecord::current)
        .def_readonly("sigma_x", &homodyne::HomodyneRecord::sigma_x)
        .def_readonly("quadrature", &homodyne::HomodyneRecord::quadrature)
        .def_readonly("kick_count", &homodyne::HomodyneRecord::kick_count)
        .def_readonly("lifetime_warning", &homodyne::HomodyneRecord::lifetime_warning);
    hd.def("homodyne_current", &homodyne::homodyne_current, py::arg("state"), py::arg("alpha_mag"),
           py::arg("theta") = 0.0);
    hd.def(
        "back_action_trace",
        [](const QubitState& state, double dW) {
            return homodyne::back_action_delta(homodyne::DensityMatrix2::from_state(state), dW).trace();
        },
        py::arg("state"), py::arg("dW"), "Trace of the back-action increment (zero up to rounding).");
    hd.def(
        "run",
        [](double gamma, double dt, double t_max, std::uint64_t n_traj, std::uint64_t seed, const std::string& noise,
           double beta, double noise_scale, double theta, unsigned threads) {
            homodyne::HomodyneParams p;
            p.gamma = gamma;
            p.dt = dt;
            p.t_max = t_max;
            p.noise = homodyne::parse_noise_model(noise);
            p.beta = beta;
            p.noise_scale = noise_scale;
            p.theta = theta;
            p.validate();
            py::gil_scoped_release release;
            return homodyne::run_homodyne_ensemble(p, n_traj, seed, threads);
        },
        py::arg("gamma") = 0.01, py::arg("dt") = 1e-3, py::arg("t_max") = 1.0, py::arg("n_traj") = 10,
        py::arg("seed") = 0, py::arg("noise") = "white", py::arg("beta") = 100.0, py::arg("noise_scale") = 1.0,
        py::arg("theta") = 0.0, py::arg("threads") = 1);
    hd.def("noise_increments", &homodyne::noise_increments, py::arg("record"));
    hd.def(
        "signal_autocorrelation",
        [](const std::vector<homodyne::HomodyneRecord>& records, std::size_t max_lag) {
            const auto ac = homodyne::signal_autocorrelation(records, max_lag);
            return py::make_tuple(ac.zeta, ac.se);
        },
        py::arg("records"), py::arg("max_lag"));

    auto rb = m.def_submodule("rabi", "Driven two-level atom");
    rb.def("torrey_occupation", &rabi::torrey_occupation, py::arg("omega_rabi"), py::arg("gamma"), py::arg("t"));
    rb.def("rabi_occupation_undamped", &rabi::rabi_occupation_undamped, py::arg("omega_rabi"), py::arg("t"));
    rb.def(
        "run",
        [](const std::string& model, double gamma, double omega_rabi, double beta, double dt, double t_max,
           std::uint64_t n_traj, std::uint64_t seed, std::size_t record_stride, unsigned threads) {
            const auto p = make_params(model, gamma, beta, dt, t_max, n_traj, seed, 0.0, 0.0, omega_rabi);
            TrajectoryOptions opts{QubitState::ground_state(), record_stride};
            py::gil_scoped_release release;
            return rabi::run_driven_ensemble(p, opts, threads);
        },
        py::arg("model"), py::arg("gamma") = 0.2, py::arg("omega_rabi") = 2.0, py::arg("beta") = 0.0,
        py::arg("dt") = 0.005, py::arg("t_max") = 25.0, py::arg("n_traj") = 1000, py::arg("seed") = 0,
        py::arg("record_stride") = 10, py::arg("threads") = 1);
    rb.def(
        "mean_occupation",
        [](const std::vector<TrajectoryRecord>& records, const std::vector<double>& times) {
            const auto c = rabi::mean_occupation(records, times);
            return py::make_tuple(c.mean, c.se);
        },
        py::arg("records"), py::arg("times"));
    rb.def(
        "fluorescence_intensity",
        [](const std::vector<TrajectoryRecord>& records, double t_max, double bin_width) {
            const auto f = rabi::fluorescence_intensity(records, t_max, bin_width);
            return py::make_tuple(f.bin_centers, f.intensity, f.se);
        },
        py::arg("records"), py::arg("t_max"), py::arg("bin_width"));
}
