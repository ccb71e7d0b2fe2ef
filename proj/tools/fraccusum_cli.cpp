// fraccusum command-line front end.
//
// Subcommands: generate, calibrate, detect, experiment, validate.
// Exit codes: 0 success/alarm, 2 usage or config error, 3 no alarm on the
// horizon, 4 strict z-score bound breached, 5 validation failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <fraccusum/fraccusum.hpp>

using nlohmann::json;
using namespace fraccusum;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNoAlarm = 3;
constexpr int kExitStrictBreach = 4;
constexpr int kExitValidationFailure = 5;

std::string format17(double x) { return detail::format_real(x); }

std::uint64_t default_master_seed() {
    if (const char* env = std::getenv("FRACCUSUM_SEED"))
        return std::strtoull(env, nullptr, 10);
    return 0;
}

struct DriftFlags {
    std::string family = "polynomial";
    double theta = 1.0;
    double alpha = 0.0;
    double c0 = 0.0;
    double c1 = 0.0;
    double power = 0.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--drift-family", family, "polynomial | affine | bounded-power")
            ->check(CLI::IsMember({"polynomial", "affine", "bounded-power"}));
        cmd->add_option("--theta", theta, "polynomial amplitude");
        cmd->add_option("--alpha", alpha, "polynomial exponent (> -1)");
        cmd->add_option("--c0", c0, "state-dependent drift intercept");
        cmd->add_option("--c1", c1, "state-dependent drift slope");
        cmd->add_option("--power", power, "bounded-power exponent in [0,1)");
    }

    DriftSpec build() const {
        if (family == "polynomial") return DriftSpec::polynomial(theta, alpha);
        if (family == "affine") return DriftSpec::affine(c0, c1);
        return DriftSpec::bounded_power(c0, c1, power);
    }
};

void warn_energy_condition(const DriftSpec& drift, double hurst) {
    if (!drift.satisfies_energy_condition(hurst))
        std::cerr << "warning: alpha + 1 <= H, the energy condition fails and the "
                     "detector is not K-L optimal for this drift\n";
}

/// Flat key=value experiment config; '#' starts a comment. Flags given on
/// the command line keep precedence over file values.
std::map<std::string, std::string> read_flat_config(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file: " + file);
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + " is not key=value");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::vector<std::pair<double, double>> read_path_csv(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open path file: " + file);
    std::vector<std::pair<double, double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("time,", 0) == 0) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ConfigError("malformed path row at line " + std::to_string(lineno));
        std::size_t pos_t = 0, pos_v = 0;
        double t = 0.0, v = 0.0;
        try {
            t = std::stod(line.substr(0, comma), &pos_t);
            v = std::stod(line.substr(comma + 1), &pos_v);
        } catch (const std::exception&) {
            throw ConfigError("malformed path row at line " + std::to_string(lineno));
        }
        if (pos_t != comma || comma + 1 + pos_v != line.size())
            throw ConfigError("malformed path row at line " + std::to_string(lineno));
        rows.emplace_back(t, v);
    }
    if (rows.size() < 3) throw ConfigError("path file needs at least 3 rows");
    return rows;
}

SamplePath path_from_rows(const std::vector<std::pair<double, double>>& rows) {
    const double step = rows[1].first - rows[0].first;
    if (!(step > 0.0)) throw ConfigError("path file times must be increasing");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double expect = rows[0].first + static_cast<double>(i) * step;
        if (std::abs(rows[i].first - expect) > 1e-9 * std::max(1.0, std::abs(expect)))
            throw ConfigError("path file must sit on a uniform grid starting at 0");
    }
    if (std::abs(rows[0].first) > 1e-12 || std::abs(rows[0].second) > 1e-12)
        throw ConfigError("path file must start at (0, 0)");
    Grid grid(step, rows.size() - 1);
    std::vector<double> values(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) values[i] = rows[i].second;
    values[0] = 0.0;
    return SamplePath(grid, std::move(values));
}

// ---------------------------------------------------------------------------

int cmd_generate(double hurst, std::size_t steps, double dt, std::uint64_t seed,
                 std::uint64_t replicate, const DriftFlags& drift_flags, bool with_drift,
                 const std::string& tau, const std::string& out_file) {
    HurstIndex h(hurst);
    Grid grid(dt, steps);
    SamplePath path = sample_fbm(h, grid, Seed{seed, replicate});
    if (with_drift) {
        const DriftSpec drift = drift_flags.build();
        warn_energy_condition(drift, hurst);
        path = inject_drift(path, drift, tau == "inf" ? kTauInfinity : 0.0);
    }

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out_file.empty()) {
        file.open(out_file, std::ios::binary);
        if (!file) throw IoError("cannot open output file: " + out_file);
        os = &file;
    }
    *os << "time,value\n";
    for (std::size_t j = 0; j <= grid.count; ++j)
        *os << format17(grid.time(j)) << ',' << format17(path.values[j]) << '\n';
    return kExitOk;
}

int cmd_calibrate(double gamma) {
    const Threshold c = calibrate_threshold(FalseAlarmBudget(gamma));
    json j;
    j["gamma"] = gamma;
    j["c"] = c.c;
    j["g"] = g_fn(c.c);
    j["h"] = h_fn(c.c);
    std::cout << j.dump(2) << '\n';
    return kExitOk;
}

int cmd_detect(const std::string& file, double hurst, double sigma0,
               const DriftFlags& drift_flags, double threshold, double gamma) {
    SamplePath path = path_from_rows(read_path_csv(file));
    HurstIndex h(hurst);
    const DriftSpec drift = drift_flags.build();
    warn_energy_condition(drift, hurst);
    const VolatilitySpec sigma = VolatilitySpec::constant(sigma0);
    const Threshold c = !std::isnan(threshold)
                            ? Threshold(threshold)
                            : calibrate_threshold(FalseAlarmBudget(gamma));

    const MartingaleTrace trace = fundamental_transform_fast(path, h, sigma);
    const QTrace q = drift.state_dependent()
                         ? q_process_numeric(drift, path, h, sigma)
                         : q_process_poly(h, drift.theta, drift.alpha, path.grid);
    const LLRTrace llr = llr_trace(q, trace);
    const DetectionResult det = cusum_run(llr, c);

    json j;
    j["threshold_c"] = c.c;
    j["stopped"] = det.stopped;
    j["horizon"] = path.grid.horizon();
    if (det.stopped) {
        j["stop_index"] = *det.stop_index;
        j["stop_time"] = *det.stop_time;
        j["overshoot"] = *det.overshoot;
        j["qv_at_stop"] = *det.qv_at_stop;
        j["u_at_stop"] = *det.u_at_stop;
    }
    std::cout << j.dump(2) << '\n';
    return det.stopped ? kExitOk : kExitNoAlarm;
}

int cmd_experiment(double hurst, const DriftFlags& drift_flags, double sigma0,
                   const std::string& regime, double step, std::size_t steps,
                   double gamma, double threshold, std::size_t replicates,
                   std::uint64_t seed, unsigned workers, const std::string& out_prefix,
                   double strict) {
    Grid grid(step, steps);
    const DriftSpec drift = drift_flags.build();
    warn_energy_condition(drift, hurst);
    std::variant<FalseAlarmBudget, Threshold> bot = Threshold(1.0);
    if (!std::isnan(gamma))
        bot = FalseAlarmBudget(gamma);
    else if (!std::isnan(threshold))
        bot = Threshold(threshold);
    else
        throw ConfigError("experiment needs --gamma or --threshold");

    ExperimentConfig config{HurstIndex(hurst),
                            drift,
                            VolatilitySpec::constant(sigma0),
                            regime == "pre-change" ? Regime::pre_change
                                                   : Regime::post_change_at_zero,
                            grid,
                            grid.horizon(),
                            bot,
                            replicates,
                            seed,
                            workers};
    const ExperimentReport report = run_experiment(config);

    if (!out_prefix.empty()) {
        write_report(report, out_prefix + ".json", ReportFormat::json);
        write_report(report, out_prefix + ".csv", ReportFormat::csv);
    }

    std::cout << "threshold c = " << format17(report.threshold_c)
              << "  g(c) = " << format17(report.theory_g)
              << "  h(c) = " << format17(report.theory_h) << '\n';
    std::cout << "stopped " << report.n_stopped << "/" << report.n_replicates
              << "  censor_rate = " << format17(report.censor_rate)
              << "  failed = " << report.n_failed << '\n';
    std::printf("%-16s %14s %12s %14s %8s\n", "estimand", "estimate", "std_err", "theory", "z");
    bool breach = false;
    for (const EstimandSummary& e : report.estimands) {
        std::printf("%-16s %14.6g %12.3g", e.name.c_str(), e.mean, e.std_error);
        if (e.theory)
            std::printf(" %14.6g", *e.theory);
        else
            std::printf(" %14s", "-");
        if (e.z_score) {
            std::printf(" %8.2f\n", *e.z_score);
            if (!std::isnan(strict) && std::abs(*e.z_score) > strict) breach = true;
        } else {
            std::printf(" %8s\n", "-");
        }
    }
    return !std::isnan(strict) && breach ? kExitStrictBreach : kExitOk;
}

struct ValidateStats {
    int passed = 0;
    int failed = 0;

    void record(const std::string& name, bool ok, const std::string& detail) {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name;
        if (!detail.empty()) std::cout << "  (" << detail << ")";
        std::cout << '\n';
        (ok ? passed : failed) += 1;
    }
};

int cmd_validate(const std::vector<double>& hurst_list, bool fast, std::uint64_t seed) {
    ValidateStats stats;
    const std::size_t reps = fast ? 1000 : 10000;

    {
        bool ok = true;
        double worst = 0.0;
        for (double gamma : {1e-4, 0.01, 0.1, 0.718281828, 5.0, 100.0}) {
            const double c = calibrate_threshold(FalseAlarmBudget(gamma)).c;
            const double err = std::abs(h_fn(c) - gamma) / std::max(1.0, gamma);
            worst = std::max(worst, err);
            ok = ok && err <= 1e-12;
        }
        std::ostringstream d;
        d << "worst rel residual " << worst;
        stats.record("calibration round-trip", ok, d.str());
    }

    for (double hv : hurst_list) {
        HurstIndex h(hv);
        const std::size_t n = 256;
        Grid grid(1.0 / static_cast<double>(n), n);
        FgnSampler sampler(h, grid);
        std::vector<double> terminal(reps);
        for (std::uint64_t r = 0; r < reps; ++r)
            terminal[r] = sampler.sample(Seed{seed, r}).values.back();
        double mean = 0.0;
        for (double x : terminal) mean += x;
        mean /= static_cast<double>(reps);
        double var = 0.0;
        for (double x : terminal) var += (x - mean) * (x - mean);
        var /= static_cast<double>(reps - 1);
        const double ratio = var / std::pow(grid.horizon(), 2.0 * hv);
        const double band = 5.0 / std::sqrt(static_cast<double>(reps));
        std::ostringstream d;
        d << "H=" << hv << " var ratio " << ratio;
        stats.record("generator variance ratio", std::abs(ratio - 1.0) < band, d.str());
    }

    {
        HurstIndex h(0.5);
        const std::size_t n = 200;
        Grid grid(0.01, n);
        FgnSampler sampler(h, grid);
        std::vector<double> incr;
        incr.reserve(reps);
        for (std::uint64_t r = 0; incr.size() < reps; ++r) {
            SamplePath p = sampler.sample(Seed{seed + 1, r});
            for (std::size_t j = 0; j < n && incr.size() < reps; ++j)
                incr.push_back(p.values[j + 1] - p.values[j]);
        }
        double m = 0.0;
        for (double x : incr) m += x;
        m /= static_cast<double>(incr.size());
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i + 1 < incr.size(); ++i) num += (incr[i] - m) * (incr[i + 1] - m);
        for (double x : incr) den += (x - m) * (x - m);
        const double rho = num / den;
        std::ostringstream d;
        d << "lag-1 autocorr " << rho;
        stats.record("whiteness at H=1/2", std::abs(rho) < 4.0 / std::sqrt(static_cast<double>(incr.size())), d.str());
    }

    {
        HurstIndex h(0.5);
        Grid grid(0.01, 300);
        SamplePath p = sample_fbm(h, grid, Seed{seed + 2, 0});
        MartingaleTrace t = fundamental_transform(p, h, VolatilitySpec::constant(1.0));
        double worst = 0.0;
        for (std::size_t j = 0; j < t.zeta.size(); ++j)
            worst = std::max(worst, std::abs(t.zeta[j] - p.values[j]));
        std::ostringstream d;
        d << "max |zeta - xi| = " << worst;
        stats.record("transform identity at H=1/2", worst < 1e-12, d.str());
    }

    for (double hv : hurst_list) {
        HurstIndex h(hv);
        const std::size_t n = 1000;
        Grid grid(0.001, n);
        SamplePath zero(grid, std::vector<double>(n + 1, 0.0));
        double worst = 0.0;
        for (double alpha : {0.0, hv - 0.5, 0.25}) {
            QTrace numeric = q_process_numeric(DriftSpec::polynomial(1.0, alpha), zero, h,
                                               VolatilitySpec::constant(1.0));
            const double d = poly_coefficients(h, alpha).d;
            for (std::size_t k = n / 10; k <= n; ++k) {
                const double expect = d * std::pow(grid.time(k), alpha);
                worst = std::max(worst, std::abs(numeric.q[k] - expect) / std::abs(expect));
            }
        }
        std::ostringstream d;
        d << "H=" << hv << " worst rel err " << worst;
        stats.record("closed-form vs numeric Q", worst < 1e-3, d.str());
    }

    for (double hv : hurst_list) {
        if (hv == 0.5) continue;
        HurstIndex h(hv);
        const std::size_t n = 2048;
        Grid grid(0.001, n);
        SamplePath p = sample_fbm(h, grid, Seed{seed + 3, 0});
        MartingaleTrace direct = fundamental_transform(p, h, VolatilitySpec::constant(1.0));
        MartingaleTrace fast_t = fundamental_transform_fast(p, h, VolatilitySpec::constant(1.0));
        double max_ref = 0.0, max_err = 0.0;
        for (std::size_t j = 0; j < direct.zeta.size(); ++j) {
            max_ref = std::max(max_ref, std::abs(direct.zeta[j]));
            max_err = std::max(max_err, std::abs(direct.zeta[j] - fast_t.zeta[j]));
        }
        std::ostringstream d;
        d << "H=" << hv << " max err " << max_err;
        stats.record("fast/direct transform agreement", max_err <= 1e-9 * max_ref + 1e-12,
                     d.str());
    }

    std::cout << stats.passed << " passed, " << stats.failed << " failed\n";
    return stats.failed == 0 ? kExitOk : kExitValidationFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CUSUM change detection for fractional Brownian observations"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "sample a path and write time,value CSV");
    double g_hurst = 0.0;
    std::size_t g_steps = 1000;
    double g_dt = 0.01;
    std::uint64_t g_seed = default_master_seed();
    std::uint64_t g_replicate = 0;
    std::string g_out, g_tau = "0";
    bool g_with_drift = false;
    DriftFlags g_drift;
    gen->add_option("--hurst", g_hurst, "Hurst index in [0.01, 0.99]")->required();
    gen->add_option("--steps", g_steps, "number of grid increments");
    gen->add_option("--dt", g_dt, "grid step");
    gen->add_option("--seed", g_seed, "master seed (default: FRACCUSUM_SEED or 0)");
    gen->add_option("--replicate", g_replicate, "replicate index within the seed stream");
    gen->add_option("--out", g_out, "output file (default: stdout)");
    gen->add_flag("--with-drift", g_with_drift, "inject the post-change drift");
    gen->add_option("--tau", g_tau, "change point: 0 or inf")->check(CLI::IsMember({"0", "inf"}));
    g_drift.attach(gen);

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "solve h(c) = gamma and print c, g(c), h(c)");
    double c_gamma = 0.0;
    cal->add_option("--gamma", c_gamma, "false-alarm budget, > 0")->required();

    // detect
    auto* det = app.add_subcommand("detect", "run the detector offline on a path file");
    std::string d_file;
    double d_hurst = 0.0, d_sigma = 1.0;
    double d_threshold = std::numeric_limits<double>::quiet_NaN();
    double d_gamma = std::numeric_limits<double>::quiet_NaN();
    DriftFlags d_drift;
    det->add_option("--input", d_file, "path CSV from generate")->required();
    det->add_option("--hurst", d_hurst, "Hurst index")->required();
    det->add_option("--sigma", d_sigma, "constant volatility");
    det->add_option("--threshold", d_threshold, "CUSUM threshold c");
    det->add_option("--gamma", d_gamma, "false-alarm budget (alternative to --threshold)");
    d_drift.attach(det);

    // experiment
    auto* exp = app.add_subcommand("experiment", "run a seeded Monte Carlo batch");
    std::string e_config;
    exp->add_option("--config", e_config, "flat key=value config file");
    double e_hurst = 0.5, e_sigma = 1.0, e_step = 0.005;
    std::size_t e_steps = 4000, e_replicates = 1000;
    std::uint64_t e_seed = default_master_seed();
    unsigned e_workers = std::max(1u, std::thread::hardware_concurrency());
    std::string e_regime = "pre-change", e_out;
    double e_gamma = std::numeric_limits<double>::quiet_NaN();
    double e_threshold = std::numeric_limits<double>::quiet_NaN();
    double e_strict = std::numeric_limits<double>::quiet_NaN();
    DriftFlags e_drift;
    std::map<std::string, CLI::Option*> e_opts;
    e_opts["hurst"] = exp->add_option("--hurst", e_hurst, "Hurst index");
    e_opts["sigma"] = exp->add_option("--sigma", e_sigma, "constant volatility");
    e_opts["regime"] = exp->add_option("--regime", e_regime, "pre-change | post-change-at-zero")
                           ->check(CLI::IsMember({"pre-change", "post-change-at-zero"}));
    e_opts["step"] = exp->add_option("--step", e_step, "grid step");
    e_opts["steps"] = exp->add_option("--steps", e_steps, "grid increments");
    e_opts["gamma"] = exp->add_option("--gamma", e_gamma, "false-alarm budget");
    e_opts["threshold"] = exp->add_option("--threshold", e_threshold, "CUSUM threshold");
    e_opts["replicates"] = exp->add_option("--replicates", e_replicates, "Monte Carlo replicates");
    e_opts["seed"] = exp->add_option("--seed", e_seed, "master seed (default: FRACCUSUM_SEED or 0)");
    e_opts["workers"] = exp->add_option("--workers", e_workers, "worker threads");
    e_opts["out"] = exp->add_option("--out", e_out, "report file prefix (writes .json and .csv)");
    e_opts["strict"] =
        exp->add_option("--strict", e_strict, "exit 4 if any |z| with theory exceeds this bound");
    e_drift.attach(exp);
    e_opts["drift-family"] = exp->get_option("--drift-family");
    e_opts["theta"] = exp->get_option("--theta");
    e_opts["alpha"] = exp->get_option("--alpha");
    e_opts["c0"] = exp->get_option("--c0");
    e_opts["c1"] = exp->get_option("--c1");
    e_opts["power"] = exp->get_option("--power");

    // validate
    auto* val = app.add_subcommand("validate", "run the built-in property suite");
    std::vector<double> v_hurst{0.3, 0.5, 0.75};
    bool v_fast = false;
    std::uint64_t v_seed = default_master_seed();
    val->add_option("--hurst-list", v_hurst, "Hurst indices to sweep")->delimiter(',');
    val->add_flag("--fast", v_fast, "run 10^3 replicates instead of 10^4");
    val->add_option("--seed", v_seed, "master seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gen->parsed())
            return cmd_generate(g_hurst, g_steps, g_dt, g_seed, g_replicate, g_drift,
                                g_with_drift, g_tau, g_out);
        if (cal->parsed()) {
            if (!(c_gamma > 0.0)) {
                std::cerr << "error: --gamma must be > 0\n";
                return kExitUsage;
            }
            return cmd_calibrate(c_gamma);
        }
        if (det->parsed()) {
            if (std::isnan(d_threshold) && std::isnan(d_gamma)) {
                std::cerr << "error: detect needs --threshold or --gamma\n";
                return kExitUsage;
            }
            return cmd_detect(d_file, d_hurst, d_sigma, d_drift, d_threshold, d_gamma);
        }
        if (exp->parsed()) {
            if (!e_config.empty()) {
                for (const auto& [key, value] : read_flat_config(e_config)) {
                    const auto it = e_opts.find(key);
                    if (it == e_opts.end())
                        throw ConfigError("unknown config key: " + key);
                    if (it->second->count() == 0) {
                        it->second->add_result(value);
                        it->second->run_callback();
                    }
                }
            }
            return cmd_experiment(e_hurst, e_drift, e_sigma, e_regime, e_step, e_steps,
                                  e_gamma, e_threshold, e_replicates, e_seed, e_workers,
                                  e_out, e_strict);
        }
        if (val->parsed()) return cmd_validate(v_hurst, v_fast, v_seed);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitUsage;
}
