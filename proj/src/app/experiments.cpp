#include "qdecay/app/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "qdecay/homodyne.hpp"
#include "qdecay/models.hpp"
#include "qdecay/rabi.hpp"
#include "qdecay/stats.hpp"

namespace qdecay::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void prepare_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
}

fs::path table_path(const fs::path& dir, const std::string& stem, OutputFormat format) {
    return dir / (stem + std::string(extension(format)));
}

json base_summary(const ExperimentConfig& cfg, Command command) {
    json s;
    s["command"] = std::string(to_string(command));
    // Where and how fast a run executes is not part of its provenance, and
    // keeping it out makes summaries byte-identical across --threads.
    s["config"] = cfg.to_json();
    s["config"].erase("threads");
    s["config"].erase("out_dir");
    s["seed"] = cfg.params.seed;
    return s;
}

// KS distance of decay times against Exp(gamma) truncated to [0, t_max].
json decay_time_checks(const std::vector<double>& times, double gamma, double t_max) {
    json j;
    j["n_decayed"] = times.size();
    if (times.size() >= 2) {
        const auto mv = stats::mean_var_se(times);
        j["mean_decay_time"] = mv.mean;
        j["se_decay_time"] = mv.standard_error;
    }
    if (!times.empty() && gamma > 0.0) {
        const double norm = -std::expm1(-gamma * t_max);
        const double ks = stats::ks_distance(times, [&](double t) {
            return t <= 0.0 ? 0.0 : std::min(1.0, -std::expm1(-gamma * t) / norm);
        });
        j["ks_distance"] = ks;
        j["ks_threshold"] = stats::ks_threshold(times.size());
        j["ks_pass"] = ks < stats::ks_threshold(times.size());
    }
    return j;
}

json drop_checks(const std::vector<double>& drops, double gamma, double beta) {
    json j;
    j["n_events"] = drops.size();
    if (gamma > 0.0) {
        const MomentsA analytic = moments_a(gamma, beta);
        j["analytic"] = {{"mean_a", analytic.mean_a}, {"std_a", analytic.std_a}, {"r", analytic.r}};
        if (drops.size() >= 2) {
            const auto m = stats::moments(drops);
            j["empirical"] = {{"mean_a", m.mean},
                              {"std_a", m.stddev},
                              {"se_mean_a", m.se_mean},
                              {"se_std_a", m.se_stddev}};
            const bool mean_ok = std::abs(m.mean - analytic.mean_a) <= 3.0 * m.se_mean;
            const bool std_ok = std::abs(m.stddev - analytic.std_a) <= 3.0 * m.se_stddev;
            j["moments_pass"] = mean_ok && std_ok;
        }
    }
    return j;
}

json autocorrelation_checks(const stats::Autocorrelation& ac, double threshold_se) {
    double worst = 0.0;
    for (std::size_t k = 1; k < ac.zeta.size(); ++k) {
        if (ac.se[k] > 0.0) worst = std::max(worst, std::abs(ac.zeta[k]) / ac.se[k]);
    }
    const auto dips = stats::autocorrelation_dips(ac, threshold_se);
    json j;
    j["zeta0"] = ac.zeta.front();
    j["max_abs_zeta_over_se"] = worst;
    j["white_consistent"] = worst < threshold_se;
    j["dips_detected"] = dips.size();
    j["dip_lags"] = dips;
    return j;
}

void write_gnuplot(const fs::path& path, const std::string& body) {
    write_text(path, "# gnuplot script\nset datafile separator ','\nset key autotitle columnhead\n" + body);
}

} // namespace

RunResult run_decay(const ExperimentConfig& cfg, OutputFormat format) {
    cfg.validate(Command::decay);
    const ModelParams& p = cfg.params;
    TrajectoryOptions options;
    options.initial = cfg.initial_state(Command::decay);
    options.record_stride = cfg.record_stride;
    const auto records = run_decay_ensemble(p, options, cfg.threads);

    RunResult result;
    json& s = result.summary;
    s = base_summary(cfg, Command::decay);
    s["n_traj"] = p.n_traj;
    s["decay"] = decay_time_checks(decay_times(records), p.gamma, p.t_max);
    if (p.model == Model::nsm) {
        s["occupation_drop"] = drop_checks(occupation_drops(records, p.gamma), p.gamma, p.beta);
        s["ill_defined_limit"] = p.beta == 0.0;
    }

    prepare_out_dir(cfg.out_dir);
    {
        const auto path = table_path(cfg.out_dir, "decay_times", format);
        TableWriter w(path, {"traj_id", "t_decay"}, format);
        for (const auto& r : records) {
            if (r.decay_time) w.row({r.traj_id, *r.decay_time});
        }
        w.close();
        result.files.push_back(path);
    }
    {
        const auto path = table_path(cfg.out_dir, "events", format);
        TableWriter w(path, {"traj_id", "t", "kind", "occupation_before", "occupation_after"}, format);
        for (const auto& r : records) {
            for (const auto& e : r.events) {
                w.row({r.traj_id, e.t, std::string(to_string(e.kind)), e.occupation_before, e.occupation_after});
            }
        }
        w.close();
        result.files.push_back(path);
    }
    const auto summary_path = cfg.out_dir / "summary.json";
    write_text(summary_path, s.dump(2) + "\n");
    result.files.push_back(summary_path);
    if (format == OutputFormat::csv) {
        const auto gp = cfg.out_dir / "plot_decay.gp";
        write_gnuplot(gp, "set xlabel 't'\nset ylabel 'decays'\nbinwidth = 0.1\n"
                          "plot 'decay_times.csv' using (binwidth*floor($2/binwidth)):(1.0) smooth freq with boxes\n");
        result.files.push_back(gp);
    }
    return result;
}

RunResult run_homodyne(const ExperimentConfig& cfg, OutputFormat format) {
    cfg.validate(Command::homodyne);
    const auto hp = cfg.homodyne_params();
    const auto records = homodyne::run_homodyne_ensemble(hp, cfg.params.n_traj, cfg.params.seed, cfg.threads);
    const auto ac = homodyne::signal_autocorrelation(records, cfg.max_lag);
    const auto spectrum = stats::power_spectrum(ac.zeta, hp.dt);

    std::vector<double> increments;
    std::uint64_t kicks = 0;
    for (const auto& r : records) {
        const auto inc = homodyne::noise_increments(r);
        increments.insert(increments.end(), inc.begin(), inc.end());
        kicks += r.kick_count;
    }

    RunResult result;
    json& s = result.summary;
    s = base_summary(cfg, Command::homodyne);
    s["noise_model"] = std::string(homodyne::to_string(hp.noise));
    s["kappa_effective"] = hp.noise == homodyne::NoiseModel::nsm_point_process ? hp.effective_kappa() : 0.0;
    s["kick_count"] = kicks;
    s["lifetime_warning"] = hp.gamma * hp.t_max > 0.1;
    s["autocorrelation"] = autocorrelation_checks(ac, 5.0);
    if (increments.size() >= 400) {
        const auto k = stats::excess_kurtosis(increments);
        s["increment_excess_kurtosis"] = {{"value", k.value}, {"se", k.se}};
    }

    prepare_out_dir(cfg.out_dir);
    {
        const auto path = table_path(cfg.out_dir, "signal", format);
        TableWriter w(path, {"traj_id", "t", "current", "sigma_x"}, format);
        for (const auto& r : records) {
            for (std::size_t i = 0; i < r.times.size(); ++i) {
                w.row({r.traj_id, r.times[i], cfg.alpha_mag * r.current[i], r.sigma_x[i]});
            }
        }
        w.close();
        result.files.push_back(path);
    }
    {
        const auto path = table_path(cfg.out_dir, "autocorrelation", format);
        TableWriter w(path, {"lag", "zeta"}, format);
        for (std::size_t k = 0; k < ac.zeta.size(); ++k) w.row({static_cast<double>(k) * hp.dt, ac.zeta[k]});
        w.close();
        result.files.push_back(path);
    }
    {
        const auto path = table_path(cfg.out_dir, "spectrum", format);
        TableWriter w(path, {"freq", "power"}, format);
        for (std::size_t m = 0; m < spectrum.power.size(); ++m) w.row({spectrum.frequencies[m], spectrum.power[m]});
        w.close();
        result.files.push_back(path);
    }
    const auto summary_path = cfg.out_dir / "summary.json";
    write_text(summary_path, s.dump(2) + "\n");
    result.files.push_back(summary_path);
    if (format == OutputFormat::csv) {
        const auto gp = cfg.out_dir / "plot_homodyne.gp";
        write_gnuplot(gp, "set multiplot layout 2,1\nplot 'autocorrelation.csv' using 1:2 with linespoints\n"
                          "plot 'spectrum.csv' using 1:2 with lines\nunset multiplot\n");
        result.files.push_back(gp);
    }
    return result;
}

RunResult run_rabi(const ExperimentConfig& cfg, OutputFormat format) {
    cfg.validate(Command::rabi);
    const ModelParams& p = cfg.params;
    TrajectoryOptions options;
    options.initial = cfg.initial_state(Command::rabi);
    options.record_stride = cfg.record_stride != 0
                                ? cfg.record_stride
                                : static_cast<std::size_t>(std::max<long long>(1, std::llround(cfg.bin_width / p.dt)));
    const auto records = rabi::run_driven_ensemble(p, options, cfg.threads);

    auto torrey = [&](double t) {
        return p.omega_rabi > 0.0 ? rabi::torrey_occupation(p.omega_rabi, p.gamma, t) : options.initial.excited == Complex{} ? 0.0 : 1.0;
    };

    const auto fluor = rabi::fluorescence_intensity(records, p.t_max, cfg.bin_width);
    std::vector<double> grid;
    const double spacing = static_cast<double>(options.record_stride) * p.dt;
    for (std::size_t i = 0;; ++i) {
        const double t = static_cast<double>(i) * spacing;
        if (t > p.t_max + 1e-9 * spacing) break;
        grid.push_back(t);
    }
    const auto occ = rabi::mean_occupation(records, grid);

    RunResult result;
    json& s = result.summary;
    s = base_summary(cfg, Command::rabi);
    std::uint64_t emissions = 0;
    for (const auto& r : records) {
        for (const auto& e : r.events) emissions += e.kind == EventKind::photon_detection ? 1 : 0;
    }
    s["emissions"] = emissions;
    {
        // Late-time window: the second half of the run.
        double count_rate = 0.0;
        std::size_t bins = 0;
        for (std::size_t i = 0; i < fluor.bin_centers.size(); ++i) {
            if (fluor.bin_centers[i] >= 0.5 * p.t_max) {
                count_rate += fluor.intensity[i];
                ++bins;
            }
        }
        if (bins > 0) {
            const double mean = count_rate / static_cast<double>(bins);
            const double total_counts = mean * static_cast<double>(bins) * cfg.bin_width * static_cast<double>(p.n_traj);
            const double se = std::sqrt(total_counts) / (static_cast<double>(bins) * cfg.bin_width * static_cast<double>(p.n_traj));
            s["late_intensity"] = {{"mean", mean}, {"se", se}, {"gamma_over_2", 0.5 * p.gamma},
                                   {"within_3se", std::abs(mean - 0.5 * p.gamma) <= 3.0 * se}};
        }
    }
    std::optional<rabi::DropHistogram> drops;
    if (p.model == Model::nsm && p.gamma > 0.0 && p.beta > 0.0) {
        drops = rabi::fluorescence_fluctuation_histogram(records, p.model, p.gamma, p.beta, cfg.drop_bin_width);
        const auto& h = drops->histogram;
        const double n = static_cast<double>(h.total());
        std::vector<double> expected;
        const double r = p.beta / p.gamma;
        for (std::size_t i = 0; i < h.counts.size(); ++i) {
            const double lo = h.lo + static_cast<double>(i) * h.bin_width();
            const double hi = lo + h.bin_width();
            expected.push_back(n * (std::pow(1.0 - lo, r) - std::pow(1.0 - hi, r)));
        }
        if (n > 0) {
            const auto chi = stats::chi_square(h.counts, expected);
            s["drop_histogram"] = {{"n_events", h.total()}, {"chi_square", chi.statistic},
                                   {"dof", chi.dof}, {"p_value", chi.p_value}};
        }
    }

    prepare_out_dir(cfg.out_dir);
    {
        const auto path = table_path(cfg.out_dir, "fluorescence", format);
        TableWriter w(path, {"bin_center", "intensity", "se", "torrey"}, format);
        for (std::size_t i = 0; i < fluor.bin_centers.size(); ++i) {
            w.row({fluor.bin_centers[i], fluor.intensity[i], fluor.se[i], torrey(fluor.bin_centers[i])});
        }
        w.close();
        result.files.push_back(path);
    }
    {
        const auto path = table_path(cfg.out_dir, "occupation", format);
        TableWriter w(path, {"t", "mean", "se", "torrey"}, format);
        for (std::size_t i = 0; i < occ.times.size(); ++i) {
            w.row({occ.times[i], occ.mean[i], occ.se[i], torrey(occ.times[i])});
        }
        w.close();
        result.files.push_back(path);
    }
    if (drops) {
        const auto path = table_path(cfg.out_dir, "drop_histogram", format);
        TableWriter w(path, {"a_center", "count", "density_analytic"}, format);
        for (std::size_t i = 0; i < drops->histogram.counts.size(); ++i) {
            w.row({drops->histogram.bin_center(i), drops->histogram.counts[i], drops->density_analytic[i]});
        }
        w.close();
        result.files.push_back(path);
    }
    const auto summary_path = cfg.out_dir / "summary.json";
    write_text(summary_path, s.dump(2) + "\n");
    result.files.push_back(summary_path);
    if (format == OutputFormat::csv) {
        const auto gp = cfg.out_dir / "plot_rabi.gp";
        write_gnuplot(gp, "plot 'occupation.csv' using 1:2:3 with yerrorbars, '' using 1:4 with lines\n");
        result.files.push_back(gp);
    }
    return result;
}

namespace {

struct SummaryHints {
    std::optional<double> gamma;
    std::optional<double> beta;
    std::optional<double> t_max;
    std::optional<std::string> model;
};

SummaryHints read_hints(const fs::path& table) {
    SummaryHints h;
    const auto path = table.parent_path() / "summary.json";
    std::ifstream in(path);
    if (!in) return h;
    try {
        const json s = json::parse(in);
        const json& c = s.at("config");
        if (c.contains("gamma")) h.gamma = c["gamma"].get<double>();
        if (c.contains("beta")) h.beta = c["beta"].get<double>();
        if (c.contains("t_max")) h.t_max = c["t_max"].get<double>();
        if (c.contains("model")) h.model = c["model"].get<std::string>();
    } catch (const json::exception&) {
    }
    return h;
}

const std::vector<std::string>* match_schema(const Table& table, const fs::path& path) {
    for (const auto& [stem, cols] : known_schemas()) {
        if (table.columns == cols) return &cols;
    }
    // Name the first offending column against the schema the file name implies,
    // or against the schema sharing the first column.
    const std::vector<std::string>* expected = nullptr;
    for (const auto& [stem, cols] : known_schemas()) {
        if (path.stem() == stem) expected = &cols;
    }
    if (!expected) {
        for (const auto& [stem, cols] : known_schemas()) {
            if (!table.columns.empty() && cols.front() == table.columns.front() && cols.size() == table.columns.size()) {
                expected = &cols;
            }
        }
    }
    if (!expected) {
        throw Error(ErrorCode::SchemaMismatch, path.string() + ": unrecognized header starting with '" +
                                                   (table.columns.empty() ? std::string() : table.columns.front()) + "'");
    }
    for (std::size_t i = 0; i < std::max(expected->size(), table.columns.size()); ++i) {
        const std::string got = i < table.columns.size() ? table.columns[i] : "<missing>";
        const std::string want = i < expected->size() ? (*expected)[i] : "<none>";
        if (got != want) {
            throw Error(ErrorCode::SchemaMismatch, path.string() + ": column " + std::to_string(i + 1) + " is '" + got +
                                                       "', expected '" + want + "'");
        }
    }
    return expected;
}

} // namespace

AnalyzeResult analyze(const std::vector<fs::path>& files, const AnalyzeOptions& options) {
    if (files.empty()) throw Error(ErrorCode::InvalidConfig, "analyze needs at least one input file");
    AnalyzeResult result;
    json& report = result.report;
    report["files"] = json::array();
    bool pass = true;

    for (const auto& path : files) {
        const Table table = read_table(path);
        const auto* schema = match_schema(table, path);
        const auto& header = *schema;
        const SummaryHints hints = read_hints(path);
        const double gamma = options.gamma.value_or(hints.gamma.value_or(1.0));
        const double beta = options.beta.value_or(hints.beta.value_or(0.0));

        json entry;
        entry["file"] = path.filename().string();
        entry["columns"] = header;
        entry["rows"] = table.rows.size();

        if (header == known_schemas()[0].second) {
            std::vector<double> times;
            const auto col = table.column("t_decay");
            for (std::size_t i = 0; i < table.rows.size(); ++i) times.push_back(table.number(i, col));
            entry["kind"] = "decay_times";
            entry["checks"] = decay_time_checks(times, gamma, hints.t_max.value_or(std::numeric_limits<double>::infinity()));
            if (entry["checks"].contains("ks_pass")) pass = pass && entry["checks"]["ks_pass"].get<bool>();
        } else if (header == known_schemas()[1].second) {
            entry["kind"] = "events";
            std::map<std::string, std::uint64_t> counts;
            std::vector<double> drops;
            const auto kind_col = table.column("kind");
            const auto before_col = table.column("occupation_before");
            for (std::size_t i = 0; i < table.rows.size(); ++i) {
                const std::string& kind = table.rows[i][kind_col];
                parse_event_kind(kind);
                ++counts[kind];
                if (kind == "fluctuation_no_jump" || kind == "quantum_jump") {
                    drops.push_back(1.0 - table.number(i, before_col));
                }
            }
            entry["counts"] = counts;
            const bool nsm = hints.model ? *hints.model == "nsm" : counts.contains("fluctuation_no_jump");
            if (nsm && !drops.empty()) {
                entry["checks"] = drop_checks(drops, gamma, beta);
                if (entry["checks"].contains("moments_pass")) pass = pass && entry["checks"]["moments_pass"].get<bool>();
            }
        } else if (header == known_schemas()[2].second) {
            entry["kind"] = "signal";
            std::map<std::uint64_t, std::vector<double>> currents;
            std::vector<double> increments;
            const auto id_col = table.column("traj_id");
            const auto t_col = table.column("t");
            const auto cur_col = table.column("current");
            const auto sx_col = table.column("sigma_x");
            const double dt = table.rows.size() >= 2 ? table.number(1, t_col) - table.number(0, t_col) : 0.0;
            for (std::size_t i = 0; i < table.rows.size(); ++i) {
                const auto id = static_cast<std::uint64_t>(table.number(i, id_col));
                const double current = table.number(i, cur_col);
                currents[id].push_back(current);
                increments.push_back((current - table.number(i, sx_col)) * dt);
            }
            std::vector<std::vector<double>> series;
            for (auto& [id, c] : currents) series.push_back(std::move(c));
            const auto ac = stats::autocorrelation(series, options.max_lag);
            entry["checks"] = autocorrelation_checks(ac, options.dip_threshold_se);
            if (increments.size() >= 400 && dt > 0.0) {
                const auto k = stats::excess_kurtosis(increments);
                entry["checks"]["increment_excess_kurtosis"] = {{"value", k.value}, {"se", k.se}};
            }
        } else if (header == known_schemas()[3].second) {
            entry["kind"] = "fluorescence";
            double worst = 0.0;
            for (std::size_t i = 0; i < table.rows.size(); ++i) {
                const double se = table.number(i, 2);
                const double rate_gap = std::abs(table.number(i, 1) - gamma * table.number(i, 3));
                if (se > 0.0) worst = std::max(worst, rate_gap / se);
            }
            entry["checks"] = {{"max_abs_dev_over_se_vs_gamma_torrey", worst}};
        } else if (header == known_schemas()[4].second) {
            entry["kind"] = "drop_histogram";
            std::vector<std::uint64_t> counts;
            double n = 0.0;
            for (std::size_t i = 0; i < table.rows.size(); ++i) {
                counts.push_back(static_cast<std::uint64_t>(table.number(i, 1)));
                n += static_cast<double>(counts.back());
            }
            std::vector<double> expected;
            const double width = 1.0 / static_cast<double>(std::max<std::size_t>(counts.size(), 1));
            for (std::size_t i = 0; i < table.rows.size(); ++i) expected.push_back(n * table.number(i, 2) * width);
            if (counts.size() >= 2 && n > 0) {
                const auto chi = stats::chi_square(counts, expected);
                entry["checks"] = {{"chi_square", chi.statistic}, {"dof", chi.dof}, {"p_value", chi.p_value},
                                   {"chi_square_pass", chi.p_value > 0.01}};
                pass = pass && chi.p_value > 0.01;
            }
        } else {
            entry["kind"] = path.stem().string();
        }
        report["files"].push_back(entry);
    }
    report["pass"] = pass;
    result.pass = pass;

    prepare_out_dir(options.out_dir);
    write_text(options.out_dir / "report.json", report.dump(2) + "\n");
    return result;
}

} // namespace qdecay::app
