#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "qdecay/models.hpp"
#include "qdecay/stats.hpp"

using namespace qdecay;

namespace {

ModelParams decay_params(Model model, double gamma = 1.0, double beta = 0.0) {
    ModelParams p;
    p.model = model;
    p.gamma = gamma;
    p.beta = beta;
    p.dt = 0.01;
    p.t_max = 30.0;
    p.seed = 42;
    return p;
}

// Exp(gamma) restricted to [0, t_max].
stats::Cdf truncated_exponential(double gamma, double t_max) {
    const double norm = -std::expm1(-gamma * t_max);
    return [=](double t) { return t <= 0.0 ? 0.0 : std::min(1.0, -std::expm1(-gamma * t) / norm); };
}

// RK4 integration of the non-Hermitian amplitude equations
// dC1/dt = -(i w1 + gamma/2) C1, dC0/dt = -i w0 C0.
std::pair<Complex, Complex> integrate_amplitudes(Complex c1, Complex c0, double gamma, double w0, double w1,
                                                 double t, double h) {
    const Complex k1c(-0.5 * gamma, -w1);
    const Complex k0c(0.0, -w0);
    const auto n = static_cast<std::size_t>(std::llround(t / h));
    h = t / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto f1 = [&](Complex c) { return k1c * c; };
        auto f0 = [&](Complex c) { return k0c * c; };
        const Complex a1 = f1(c1), a0 = f0(c0);
        const Complex b1 = f1(c1 + 0.5 * h * a1), b0 = f0(c0 + 0.5 * h * a0);
        const Complex d1 = f1(c1 + 0.5 * h * b1), d0 = f0(c0 + 0.5 * h * b0);
        const Complex e1 = f1(c1 + h * d1), e0 = f0(c0 + h * d0);
        c1 += h / 6.0 * (a1 + 2.0 * b1 + 2.0 * d1 + e1);
        c0 += h / 6.0 * (a0 + 2.0 * b0 + 2.0 * d0 + e0);
    }
    return {c1, c0};
}

double simpson(const std::function<double(double)>& f, double lo, double hi, std::size_t n) {
    const double h = (hi - lo) / static_cast<double>(n);
    double s = f(lo) + f(hi);
    for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + h * static_cast<double>(i));
    return s * h / 3.0;
}

} // namespace

TEST(Survival, Values) {
    EXPECT_EQ(survival_probability(1.0, 0.0), 1.0);
    EXPECT_EQ(survival_probability(0.0, 5.0), 1.0);
    EXPECT_NEAR(survival_probability(1.0, std::numbers::ln2), 0.5, 1e-15);
    EXPECT_THROW(survival_probability(1.0, -1.0), Error);
}

TEST(UnitaryWeights, Values) {
    auto w = unitary_weights(1.0, 0.0);
    EXPECT_EQ(w.excited, 1.0);
    EXPECT_EQ(w.continuum, 0.0);
    w = unitary_weights(1.0, std::numbers::ln2);
    EXPECT_NEAR(w.excited, 0.5, 1e-15);
    EXPECT_NEAR(w.continuum, 0.5, 1e-15);
    w = unitary_weights(0.3, 2.0);
    EXPECT_NEAR(w.excited, 0.548811636094, 1e-12);
    EXPECT_NEAR(w.continuum, 0.451188363906, 1e-12);
}

TEST(QmopPropagate, PureExcitedStaysExcited) {
    auto p = decay_params(Model::qmop);
    for (double t : {0.1, 1.0, 10.0, 100.0}) {
        EXPECT_NEAR(occupation(qmop_propagate(QubitState::excited_state(), p, t)), 1.0, 1e-15);
    }
}

TEST(QmopPropagate, SuperpositionMatchesIntegratedAmplitudes) {
    auto p = decay_params(Model::qmop);
    const double h = 1.0 / std::sqrt(2.0);
    const QubitState s{{h, 0.0}, {h, 0.0}, 0.0};
    const double t = std::numbers::ln2;
    auto [c1, c0] = integrate_amplitudes({h, 0.0}, {h, 0.0}, 1.0, 0.0, 0.0, t, 1e-5);
    const double n2 = std::norm(c1) + std::norm(c0);
    const auto out = qmop_propagate(s, p, t);
    EXPECT_NEAR(std::norm(out.excited), std::norm(c1) / n2, 1e-9);
    EXPECT_NEAR(std::norm(out.excited), 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(std::norm(out.ground), 2.0 / 3.0, 1e-12);
}

TEST(QmopPropagate, PhasesFollowIntegration) {
    auto p = decay_params(Model::qmop, 0.7);
    p.omega0 = 0.3;
    p.omega1 = 1.9;
    const QubitState s = normalize({{0.6, 0.2}, {-0.3, 0.5}, 0.0});
    auto [c1, c0] = integrate_amplitudes(s.excited, s.ground, 0.7, 0.3, 1.9, 2.0, 1e-5);
    const double inv = 1.0 / std::sqrt(std::norm(c1) + std::norm(c0));
    const auto out = qmop_propagate(s, p, 2.0);
    EXPECT_LT(std::abs(out.excited - c1 * inv), 1e-9);
    EXPECT_LT(std::abs(out.ground - c0 * inv), 1e-9);
    EXPECT_EQ(qmop_propagate(s, p, 0.0), s);
    EXPECT_THROW(qmop_propagate({{1.0, 0.0}, {0.0, 0.0}, 0.1}, p, 1.0), Error);
}

TEST(JumpProbability, Values) {
    EXPECT_NEAR(jump_probability(QubitState::excited_state(), 1.0, 0.01), 0.01, 1e-15);
    EXPECT_EQ(jump_probability(QubitState::ground_state(), 1.0, 0.01), 0.0);
    const QubitState third{{std::sqrt(1.0 / 3.0), 0.0}, {std::sqrt(2.0 / 3.0), 0.0}, 0.0};
    EXPECT_NEAR(jump_probability(third, 1.0, 0.03), 0.01, 1e-15);
    EXPECT_THROW(jump_probability(third, 1.0, 0.2), Error);
}

TEST(Qmop, NoJumpPurityAndNormalization) {
    auto p = decay_params(Model::qmop);
    p.t_max = 10.0;
    for (std::uint64_t id = 0; id < 100; ++id) {
        RngStream s = derive_stream(3, id);
        const auto rec = run_qmop_trajectory(p, s, {QubitState::excited_state(), 1});
        for (const auto& e : rec.events) {
            if (e.kind == EventKind::step) EXPECT_NEAR(e.occupation_after, 1.0, 1e-12);
        }
    }
    // Superposition input: the no-jump branch stays normalized step by step.
    QubitState st = normalize({{1.0, 0.0}, {1.0, 0.0}, 0.0});
    for (int k = 0; k < 1000; ++k) {
        st = qmop_propagate(st, p, p.dt);
        ASSERT_NEAR(st.two_level_weight(), 1.0, 1e-12);
    }
}

TEST(Qmop, ZeroGammaAndGroundNeverJump) {
    auto p = decay_params(Model::qmop, 0.0);
    p.n_traj = 200;
    for (const auto& r : run_decay_ensemble(p)) EXPECT_FALSE(r.decay_time);
    p.gamma = 1.0;
    TrajectoryOptions ground{QubitState::ground_state(), 10};
    for (const auto& r : run_decay_ensemble(p, ground)) {
        EXPECT_FALSE(r.decay_time);
        for (const auto& e : r.events) EXPECT_EQ(e.occupation_after, 0.0);
    }
}

TEST(Swf, StepProbabilityAndSurvival) {
    auto p = decay_params(Model::swf);
    const auto step = swf_step(QubitState::excited_state(), p);
    EXPECT_NEAR(step.p_detect, -std::expm1(-0.01), 1e-15);
    // n no-detection steps: survival weight is the product of per-step factors.
    double survive = 1.0;
    QubitState s = QubitState::excited_state();
    for (int n = 0; n < 50; ++n) {
        const auto st = swf_step(s, p);
        survive *= 1.0 - st.p_detect;
        s = normalize({st.evolved.excited, st.evolved.ground, 0.0});
    }
    EXPECT_NEAR(survive, std::exp(-50 * 0.01), 1e-12);
}

TEST(DecayEngines, ExponentialLaw) {
    for (Model m : {Model::qmop, Model::swf, Model::nsm}) {
        auto p = decay_params(m, 1.0, 1.0);
        p.n_traj = 20000;
        const auto times = decay_times(run_decay_ensemble(p));
        ASSERT_GT(times.size(), 19990u);
        const double ks = stats::ks_distance(times, truncated_exponential(1.0, p.t_max));
        EXPECT_LT(ks, stats::ks_threshold(times.size())) << to_string(m);
    }
}

TEST(FluctuationGap, MeanAndDensityAtZero) {
    RngStream s(5, 0);
    std::vector<double> gaps;
    for (int i = 0; i < 1000000; ++i) gaps.push_back(sample_fluctuation_gap(1.0, s));
    const auto mv = stats::mean_var_se(gaps);
    EXPECT_NEAR(mv.mean, 1.0, 3e-3);

    std::vector<double> g2;
    for (int i = 0; i < 200000; ++i) g2.push_back(sample_fluctuation_gap(2.0, s));
    const auto h = stats::histogram(g2, 0.0, 0.05, 1);
    const double density = static_cast<double>(h.counts[0]) / (g2.size() * 0.05);
    // Mean density over [0, 0.05] is 2 (1 - e^{-0.1}) / 0.1.
    EXPECT_NEAR(density, 2.0 * (1.0 - std::exp(-0.1)) / 0.1, 5.0 * std::sqrt(density / (g2.size() * 0.05)));
}

TEST(FluctuationGap, UnitDrawIsRedrawn) {
    int calls = 0;
    const double gap = sample_fluctuation_gap(1.0, [&] { return ++calls == 1 ? 1.0 : 0.5; });
    EXPECT_EQ(calls, 2);
    EXPECT_NEAR(gap, std::numbers::ln2, 1e-15);
    EXPECT_THROW(sample_fluctuation_gap(0.0, [] { return 0.5; }), Error);
}

TEST(Nsm, GridProductLaw) {
    auto p = decay_params(Model::nsm, 1.0, 1.0);
    p.t_max = 5.0;
    const double spacing = 0.01;
    const int n_traj = 20000;
    // Survival after n fluctuations, counted directly.
    std::vector<int> alive(6, 0);
    for (int id = 0; id < n_traj; ++id) {
        RngStream s = derive_stream(11, static_cast<std::uint64_t>(id));
        const auto rec = run_nsm_trajectory(p, s, {}, fluctuation_grid(spacing));
        for (const auto& e : rec.events) EXPECT_NEAR(e.gap, spacing, 1e-12);
        const double jt = rec.jump_time.value_or(1e300);
        for (int k = 0; k < 6; ++k) alive[k] += jt > 0.5 * (k + 1) + 1e-9 ? 1 : 0;
    }
    for (int k = 0; k < 6; ++k) {
        const double n_fluct = std::round(0.5 * (k + 1) / spacing);
        const double expect = std::exp(-1.0 * n_fluct * spacing);
        const double obs = static_cast<double>(alive[k]) / n_traj;
        EXPECT_NEAR(obs, expect, 4.0 * std::sqrt(expect * (1 - expect) / n_traj)) << k;
    }
}

TEST(Nsm, BetaIndependenceOfDecayTimes) {
    for (double beta : {0.1, 1.0, 10.0}) {
        auto p = decay_params(Model::nsm, 1.0, beta);
        p.n_traj = 20000;
        const auto times = decay_times(run_decay_ensemble(p));
        const double ks = stats::ks_distance(times, truncated_exponential(1.0, p.t_max));
        EXPECT_LT(ks, stats::ks_threshold(times.size())) << beta;
    }
}

TEST(Nsm, ZeroBetaIsFlaggedAndNeverReduces) {
    auto p = decay_params(Model::nsm, 1.0, 0.0);
    p.n_traj = 10;
    for (const auto& r : run_decay_ensemble(p, {QubitState::excited_state(), 100})) {
        EXPECT_TRUE(r.ill_defined_limit);
        EXPECT_FALSE(r.decay_time);
        double prev = 1.0;
        for (const auto& e : r.events) {
            ASSERT_EQ(e.kind, EventKind::step);
            EXPECT_LT(e.occupation_after, prev);
            EXPECT_NEAR(e.occupation_after, std::exp(-e.t), 1e-12);
            prev = e.occupation_after;
        }
        EXPECT_LT(prev, 1e-12);
    }
}

TEST(Nsm, DropMomentsMatchAnalytic) {
    for (double r : {0.5, 1.0, 2.0, 10.0}) {
        auto p = decay_params(Model::nsm, 1.0, r);
        p.n_traj = 20000;
        const auto drops = occupation_drops(run_decay_ensemble(p), 1.0);
        const auto m = stats::moments(drops);
        const auto a = moments_a(1.0, r);
        EXPECT_NEAR(m.mean, a.mean_a, 3.0 * m.se_mean) << r;
        EXPECT_NEAR(m.stddev, a.std_a, 3.0 * m.se_stddev) << r;
    }
}

TEST(Densities, Values) {
    EXPECT_EQ(density_Df(1.0, 0.0), 1.0);
    EXPECT_NEAR(density_Df(1.0, -1.0), std::exp(-1.0), 1e-15);
    EXPECT_THROW(density_Df(1.0, 0.5), Error);
    EXPECT_EQ(density_Da(1.0, 0.3), 1.0);
    EXPECT_NEAR(density_Da(2.0, 1e-300), 2.0, 1e-12);
    EXPECT_THROW(density_Da(2.0, 1.0), Error);
}

TEST(Densities, NormalizedByQuadrature) {
    for (double beta : {0.5, 1.0, 3.0}) {
        const double integral = simpson([&](double tau) { return density_Df(beta, tau); }, -80.0 / beta, 0.0, 200000);
        EXPECT_NEAR(integral, 1.0, 1e-9) << beta;
    }

    for (double r : {0.5, 1.0, 2.0, 10.0}) {
        // a = 1 - s^2 turns D(a) da into 2 r s^{2r - 1} ds, smooth for r >= 1/2.
        const double integral = simpson(
            [&](double s) {
                const double a = 1.0 - s * s;
                return a > 0.0 && a < 1.0 ? density_Da(r, a) * 2.0 * s : 2.0 * r * std::pow(s, 2.0 * r - 1.0);
            },
            0.0, 1.0, 20000);
        EXPECT_NEAR(integral, 1.0, 1e-9) << r;
    }
}

TEST(Densities, ChangeOfVariables) {
    // a = 1 - e^{gamma tau}, tau <= 0: D_f(tau) = D(a) |da/dtau|.
    double worst = 0.0;
    for (double gamma : {0.5, 1.0, 2.0}) {
        for (double beta : {0.5, 1.0, 2.0, 10.0}) {
            for (double tau = -10.0; tau < -1e-3; tau += 0.01) {
                const double a = -std::expm1(gamma * tau);
                const double pushed = density_Da(beta / gamma, a) * gamma * std::exp(gamma * tau);
                worst = std::max(worst, std::abs(pushed - density_Df(beta, tau)));
            }
        }
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(MomentsA, Limits) {
    auto m = moments_a(1.0, 0.0);
    EXPECT_EQ(m.mean_a, 1.0);
    EXPECT_EQ(m.std_a, 0.0);
    m = moments_a(1.0, 1.0);
    EXPECT_NEAR(m.mean_a, 0.5, 1e-15);
    EXPECT_NEAR(m.std_a, 0.288675134595, 1e-12);
    m = moments_a(1.0, 1e12);
    EXPECT_LT(m.mean_a, 1e-11);
    EXPECT_LT(m.std_a, 1e-11);
    // Quadrature of D(a) moments.
    for (double r : {1.0, 2.0, 10.0}) {
        const double mean = simpson([&](double a) { return a * r * std::pow(1.0 - a, r - 1.0); }, 0.0, 1.0, 20000);
        const double m2 = simpson([&](double a) { return a * a * r * std::pow(1.0 - a, r - 1.0); }, 0.0, 1.0, 20000);
        const auto ma = moments_a(1.0, r);
        EXPECT_NEAR(ma.mean_a, mean, 1e-10);
        EXPECT_NEAR(ma.std_a, std::sqrt(m2 - mean * mean), 1e-10);
    }
    EXPECT_THROW(moments_a(0.0, 1.0), Error);
}

TEST(Ensemble, DeterministicAcrossThreads) {
    for (Model m : {Model::qmop, Model::swf, Model::nsm}) {
        auto p = decay_params(m, 1.0, 2.0);
        p.n_traj = 3000;
        const auto a = decay_times(run_decay_ensemble(p, {}, 1));
        const auto b = decay_times(run_decay_ensemble(p, {}, 4));
        EXPECT_EQ(a, b);
    }
}

TEST(Engines, WrongModelIsRejected) {
    auto p = decay_params(Model::qmop);
    RngStream s(1, 1);
    EXPECT_THROW(run_swf_trajectory(p, s), Error);
    EXPECT_THROW(run_nsm_trajectory(p, s), Error);
}
