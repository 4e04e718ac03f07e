// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
//
// Exit status is non-zero when a criterion fails unless it is listed in
// kKnownFailures together with the reason; those still print FAIL.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "qdecay/app/experiments.hpp"
#include "qdecay/homodyne.hpp"
#include "qdecay/models.hpp"
#include "qdecay/rabi.hpp"
#include "qdecay/stats.hpp"

using namespace qdecay;
namespace fs = std::filesystem;

namespace {

// Criterion 8 compares against a closed form that damps at gamma/2 toward
// exactly 1/2. The emission master equation the trajectories unravel damps at
// 3 gamma/4 and settles at W^2/(2W^2 + gamma^2); with 1e4 trajectories the
// difference (up to ~0.06) is many standard errors wide.
const std::map<int, std::string> kKnownFailures = {
    {8, "closed form is not the spontaneous-emission solution; see README"},
};

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

stats::Cdf exp_cdf(double gamma, double t_max) {
    const double norm = -std::expm1(-gamma * t_max);
    return [=](double t) { return t <= 0.0 ? 0.0 : std::min(1.0, -std::expm1(-gamma * t) / norm); };
}

ModelParams decay_params(Model m, double beta, std::uint64_t seed) {
    ModelParams p;
    p.model = m;
    p.gamma = 1.0;
    p.beta = beta;
    p.dt = 1e-3;
    p.t_max = 20.0;
    p.n_traj = 100000;
    p.seed = seed;
    return p;
}

constexpr double kKsLimit = 0.011;

Outcome criterion1() {
    bool ok = true;
    std::string d;
    for (Model m : {Model::qmop, Model::swf, Model::nsm}) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto p = decay_params(m, 1.0, 101);
        const auto times = decay_times(run_decay_ensemble(p));
        const double ks = stats::ks_distance(times, exp_cdf(1.0, p.t_max));
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ok = ok && ks < kKsLimit && secs < 60.0;
        d += fmt("%s ks=%.4f (%.1fs) ", std::string(to_string(m)).c_str(), ks, secs);
    }
    return {ok, d + "limit 0.011, 60 s"};
}

Outcome criterion2() {
    bool ok = true;
    std::string d;
    for (double beta : {0.1, 1.0, 10.0}) {
        const auto times = decay_times(run_decay_ensemble(decay_params(Model::nsm, beta, 202)));
        const double ks = stats::ks_distance(times, exp_cdf(1.0, 20.0));
        ok = ok && ks < kKsLimit;
        d += fmt("beta=%g ks=%.4f ", beta, ks);
    }
    return {ok, d + "limit 0.011"};
}

Outcome criterion3() {
    bool ok = true;
    std::string d;
    for (double r : {0.5, 1.0, 2.0, 10.0}) {
        auto p = decay_params(Model::nsm, r, 303);
        p.dt = 0.01;
        p.t_max = 30.0;
        const auto drops = occupation_drops(run_decay_ensemble(p), 1.0);
        const auto m = stats::moments(drops);
        const auto a = moments_a(1.0, r);
        const double zm = (m.mean - a.mean_a) / m.se_mean;
        const double zs = (m.stddev - a.std_a) / m.se_stddev;
        ok = ok && std::abs(zm) <= 3.0 && std::abs(zs) <= 3.0;
        d += fmt("r=%g mean %.5f/%.5f (z=%.2f) std %.5f/%.5f (z=%.2f); ", r, m.mean, a.mean_a, zm, m.stddev, a.std_a, zs);
    }
    return {ok, d + "limit |z| <= 3"};
}

Outcome criterion4() {
    bool ok = true;
    std::string d;
    for (double r : {1.0, 2.0}) {
        auto p = decay_params(Model::nsm, r, 404);
        p.dt = 0.01;
        p.t_max = 30.0;
        p.n_traj = 50000;
        auto drops = occupation_drops(run_decay_ensemble(p), 1.0);
        if (drops.size() < 100000) return {false, fmt("only %zu events", drops.size())};
        drops.resize(100000);
        const auto h = stats::histogram(drops, 0.0, 1.0, 20);
        std::vector<double> expected;
        for (std::size_t i = 0; i < 20; ++i) {
            const double lo = i * 0.05, hi = lo + 0.05;
            expected.push_back(1e5 * (std::pow(1.0 - lo, r) - std::pow(1.0 - hi, r)));
        }
        const auto c = stats::chi_square(h.counts, expected);
        ok = ok && c.p_value > 0.01;
        d += fmt("r=%g chi2=%.2f dof=%zu p=%.3f; ", r, c.statistic, c.dof, c.p_value);
    }
    return {ok, d + "limit p > 0.01"};
}

Outcome criterion5() {
    ModelParams p;
    p.model = Model::qmop;
    p.gamma = 1.0;
    p.dt = 1e-3;
    p.t_max = 1.0;
    double worst = 0.0;
    std::size_t checked = 0;
    for (std::uint64_t id = 0; id < 1000; ++id) {
        RngStream s = derive_stream(505, id);
        const auto rec = run_qmop_trajectory(p, s, {QubitState::excited_state(), 1});
        for (const auto& e : rec.events) {
            if (e.kind == EventKind::step || e.kind == EventKind::quantum_jump) {
                const double occ = e.kind == EventKind::step ? e.occupation_after : e.occupation_before;
                worst = std::max(worst, std::abs(occ - 1.0));
                ++checked;
            }
        }
    }
    return {worst <= 1e-12, fmt("max |n - 1| = %.2e over %zu pre-jump steps, limit 1e-12", worst, checked)};
}

Outcome criterion6() {
    // RK4 on dC1/dt = -(gamma/2) C1, dC0/dt = 0 with h = 1e-5, then normalize.
    const double h = 1e-5, gamma = 1.0, t = std::numbers::ln2;
    double c1 = 1.0 / std::sqrt(2.0), c0 = c1;
    const auto n = static_cast<std::size_t>(std::llround(t / h));
    const double hs = t / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto f = [&](double c) { return -0.5 * gamma * c; };
        const double k1 = f(c1), k2 = f(c1 + 0.5 * hs * k1), k3 = f(c1 + 0.5 * hs * k2), k4 = f(c1 + hs * k3);
        c1 += hs / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    const double oracle = c1 * c1 / (c1 * c1 + c0 * c0);
    ModelParams p;
    p.gamma = gamma;
    const double h2 = 1.0 / std::sqrt(2.0);
    const auto out = qmop_propagate({{h2, 0.0}, {h2, 0.0}, 0.0}, p, t);
    const double sim = std::norm(out.excited);
    const double err = std::max(std::abs(sim - oracle), std::abs(sim - 1.0 / 3.0));
    return {err < 1e-6, fmt("|C1|^2 = %.12f, integrated %.12f, analytic 1/3; max diff %.2e, limit 1e-6", sim, oracle, err)};
}

Outcome criterion7() {
    auto curve = [](Model m, std::uint64_t seed) {
        ModelParams p;
        p.model = m;
        p.gamma = 1.0;
        p.dt = 0.01;
        p.t_max = 5.0;
        p.n_traj = 10000;
        p.seed = seed;
        const auto recs = run_decay_ensemble(p, {QubitState::excited_state(), 25});
        std::vector<double> t;
        for (int i = 1; i <= 20; ++i) t.push_back(0.25 * i);
        return rabi::mean_occupation(recs, t);
    };
    const auto q = curve(Model::qmop, 707);
    const auto s = curve(Model::swf, 708);
    double worst = 0.0;
    for (std::size_t i = 0; i < q.times.size(); ++i) {
        const double se = std::hypot(q.se[i], s.se[i]);
        worst = std::max(worst, std::abs(q.mean[i] - s.mean[i]) / se);
    }
    return {worst <= 3.0, fmt("max |qmop - swf| / SE = %.2f over %zu bins, limit 3", worst, q.times.size())};
}

Outcome criterion8() {
    ModelParams p;
    p.model = Model::qmop;
    p.gamma = 0.2;
    p.omega_rabi = 2.0;
    p.dt = 0.005;
    p.t_max = 25.0;
    p.n_traj = 10000;
    p.seed = 808;
    const auto recs = rabi::run_driven_ensemble(p, {QubitState::ground_state(), 50});
    std::vector<double> t;
    for (int i = 1; i <= 100; ++i) t.push_back(0.25 * i);
    const auto c = rabi::mean_occupation(recs, t);
    double worst = 0.0, worst_t = 0.0;
    int outside = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double z = std::abs(c.mean[i] - rabi::torrey_occupation(p.omega_rabi, p.gamma, t[i])) / c.se[i];
        outside += z > 3.0;
        if (z > worst) {
            worst = z;
            worst_t = t[i];
        }
    }
    // Asymptote: mean over t in [20, 25].
    double late = 0.0;
    int n_late = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] >= 20.0) {
            late += c.mean[i];
            ++n_late;
        }
    }
    late /= n_late;
    const bool shape = outside == 0;
    const bool asym = std::abs(late - 0.5) <= 0.02;
    return {shape && asym, fmt("%d/%zu bins beyond 3 SE (worst %.1f SE at t=%.2f); late mean %.4f vs 0.5 (limit 0.02)",
                               outside, t.size(), worst, worst_t, late)};
}

Outcome criterion9() {
    RngStream rng(909, 0);
    double worst_trace = 0.0;
    for (int i = 0; i < 10000; ++i) {
        double x, y, z;
        do {
            x = 2 * rng.uniform() - 1;
            y = 2 * rng.uniform() - 1;
            z = 2 * rng.uniform() - 1;
        } while (x * x + y * y + z * z > 1.0);
        const homodyne::DensityMatrix2 rho{0.5 * (1 + z), 0.5 * (1 - z), {0.5 * x, -0.5 * y}};
        const double dW = 0.1 * (2 * rng.uniform() - 1);
        worst_trace = std::max(worst_trace, std::abs(homodyne::back_action_delta(rho, dW).trace()));
    }
    const homodyne::DetectionState s{0.6, 0.8, 0.0};
    std::vector<double> lr, ld;
    for (double r : {1e-1, 1e-2, 1e-3}) {
        const double alpha = 0.8 / r;
        const auto a = homodyne::apply_detection_first_order(s, alpha);
        const auto b = homodyne::apply_detection_exact(s, alpha);
        const double dev = std::max({std::abs(a.excited - b.excited), std::abs(a.ground - b.ground), std::abs(a.photon - b.photon)});
        lr.push_back(std::log(r));
        ld.push_back(std::log(dev));
    }
    // Least-squares slope.
    const double mx = (lr[0] + lr[1] + lr[2]) / 3, my = (ld[0] + ld[1] + ld[2]) / 3;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < 3; ++i) {
        sxy += (lr[i] - mx) * (ld[i] - my);
        sxx += (lr[i] - mx) * (lr[i] - mx);
    }
    const double slope = sxy / sxx;
    return {worst_trace <= 1e-14 && std::abs(slope - 2.0) <= 0.1,
            fmt("max |Tr drho| = %.1e (limit 1e-14); deviation slope %.3f (limit 2.0 +- 0.1)", worst_trace, slope)};
}

Outcome criterion10() {
    homodyne::HomodyneParams p;
    p.gamma = 0.01;
    p.dt = 1e-4;
    p.t_max = 1.0;
    const auto white = homodyne::run_homodyne_ensemble(p, 100, 1010);
    const auto ac = homodyne::signal_autocorrelation(white, 50);
    double worst = 0.0;
    for (std::size_t k = 1; k < ac.zeta.size(); ++k) worst = std::max(worst, std::abs(ac.zeta[k]) / ac.se[k]);

    std::vector<double> iw;
    std::size_t samples = 0;
    for (const auto& r : white) {
        samples += r.current.size();
        const auto x = homodyne::noise_increments(r);
        iw.insert(iw.end(), x.begin(), x.end());
    }
    p.noise = homodyne::NoiseModel::nsm_point_process;
    p.beta = 0.1 / p.dt;
    const auto nsm = homodyne::run_homodyne_ensemble(p, 100, 1011);
    std::vector<double> in;
    for (const auto& r : nsm) {
        const auto x = homodyne::noise_increments(r);
        in.insert(in.end(), x.begin(), x.end());
    }
    const auto acn = homodyne::signal_autocorrelation(nsm, 1);
    const auto kw = stats::excess_kurtosis(iw);
    const auto kn = stats::excess_kurtosis(in);
    const double sigmas = (kn.value - kw.value) / std::hypot(kn.se, kw.se);
    return {worst < 5.0 && sigmas >= 5.0,
            fmt("white: %zu samples, max |zeta(k>=1)|/SE = %.2f (limit 5); zeta0 white %.0f nsm %.0f; "
                "kurtosis white %.3f nsm %.2f, %.1f sigma apart (limit 5)",
                samples, worst, ac.zeta[0], acn.zeta[0], kw.value, kn.value, sigmas)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome criterion11() {
    const auto root = fs::temp_directory_path() / ("qdecay_accept_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    const std::vector<std::pair<std::string, std::string>> runs = {
        {"decay", R"({"model":"qmop","gamma":1,"dt":0.01,"t_max":10,"n_traj":5000,"seed":42,"record_stride":100})"},
        {"decay", R"({"model":"swf","gamma":1,"dt":0.01,"t_max":10,"n_traj":5000,"seed":42})"},
        {"decay", R"({"model":"nsm","gamma":1,"beta":2,"dt":0.01,"t_max":10,"n_traj":5000,"seed":42,"record_stride":50})"},
        {"homodyne", R"({"gamma":0.01,"dt":0.001,"t_max":1,"n_traj":50,"seed":42,"max_lag":20})"},
        {"homodyne", R"({"gamma":0.01,"dt":0.001,"t_max":1,"n_traj":50,"seed":42,"noise":"nsm_point_process","beta":200,"max_lag":20})"},
        {"rabi", R"({"model":"qmop","gamma":0.2,"omega_rabi":2,"dt":0.005,"t_max":10,"n_traj":500,"seed":42})"},
        {"rabi", R"({"model":"nsm","gamma":0.5,"beta":1,"omega_rabi":2,"dt":0.005,"t_max":10,"n_traj":500,"seed":42})"},
    };
    std::size_t files = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto cfg = root / ("cfg" + std::to_string(i) + ".json");
        std::ofstream(cfg) << runs[i].second;
        std::map<std::string, std::string> ref;
        for (const char* threads : {"1", "4", "8"}) {
            const auto out = root / (std::to_string(i) + "_" + threads);
            const std::string cmd = std::string(QDECAY_CLI_PATH) + " " + runs[i].first + " --config " + cfg.string() +
                                    " --out-dir " + out.string() + " --threads " + threads + " > /dev/null";
            const int status = std::system(cmd.c_str());
            if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, "run failed: " + cmd};
            std::vector<std::string> analyzed;
            for (const auto& e : fs::directory_iterator(out)) {
                if (e.path().extension() == ".csv") analyzed.push_back(e.path().string());
            }
            std::sort(analyzed.begin(), analyzed.end());
            std::string acmd = std::string(QDECAY_CLI_PATH) + " analyze --out-dir " + out.string();
            for (const auto& a : analyzed) {
                const auto stem = fs::path(a).stem().string();
                if (stem == "decay_times" || stem == "events" || stem == "signal" || stem == "drop_histogram" ||
                    stem == "fluorescence")
                    acmd += " " + a;
            }
            const int astatus = std::system((acmd + " > /dev/null").c_str());
            if (!WIFEXITED(astatus) || WEXITSTATUS(astatus) != 0) return {false, "analyze failed: " + acmd};

            for (const auto& e : fs::directory_iterator(out)) {
                const auto name = e.path().filename().string();
                const auto bytes = slurp(e.path());
                if (std::string(threads) == "1") {
                    ref[name] = bytes;
                } else if (!ref.contains(name) || ref[name] != bytes) {
                    return {false, runs[i].first + " #" + std::to_string(i) + ": " + name + " differs at --threads " + threads};
                }
            }
        }
        files += ref.size();
    }
    fs::remove_all(root);
    return {true, fmt("%zu runs x 3 thread counts, %zu files each byte-identical", runs.size(), files)};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"exponential decay law (qmop, swf, nsm)", criterion1},
        {"nsm decay law independent of beta", criterion2},
        {"occupation-drop moments", criterion3},
        {"occupation-drop density shape", criterion4},
        {"qmop no-jump purity", criterion5},
        {"qmop superposition at gamma t = ln 2", criterion6},
        {"swf / qmop continuous-limit equivalence", criterion7},
        {"driven occupation vs closed-form damped Rabi curve", criterion8},
        {"homodyne back-action trace and expansion order", criterion9},
        {"autocorrelation discrimination white vs point process", criterion10},
        {"reproducibility across thread counts", criterion11},
    };
    int unexpected = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const auto known = kKnownFailures.find(id);
        std::string note;
        if (!o.pass && known != kKnownFailures.end()) note = " [known: " + known->second + "]";
        if (!o.pass && known == kKnownFailures.end()) ++unexpected;
        std::printf("%s %2d %s: %s%s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str(),
                    note.c_str());
        std::fflush(stdout);
    }
    return unexpected == 0 ? 0 : 1;
}
