#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fraccusum/cusum.hpp"
#include "fraccusum/fbm.hpp"
#include "fraccusum/likelihood.hpp"
#include "fraccusum/transform.hpp"

namespace fraccusum {

enum class Regime { pre_change, post_change_at_zero };

inline const char* to_string(Regime r) {
    return r == Regime::pre_change ? "pre_change" : "post_change_at_zero";
}

/// Full description of one Monte Carlo batch. The worker count controls
/// execution only; it is deliberately absent from the serialized echo so
/// reports are byte-identical across schedules.
struct ExperimentConfig {
    HurstIndex hurst;
    DriftSpec drift;
    VolatilitySpec sigma;
    Regime regime = Regime::pre_change;
    Grid grid;
    double horizon;
    std::variant<FalseAlarmBudget, Threshold> budget_or_threshold;
    std::size_t replicates = 1;
    std::uint64_t master_seed = 0;
    unsigned workers = 1;

    void validate() const {
        if (replicates < 1) throw ConfigError("ExperimentConfig: replicates must be >= 1");
        if (workers < 1) throw ConfigError("ExperimentConfig: workers must be >= 1");
        const double expect = grid.step * static_cast<double>(grid.count);
        if (std::abs(horizon - expect) > 1e-9 * std::max(1.0, expect))
            throw ConfigError("ExperimentConfig: horizon must equal grid.step * grid.count");
    }

    Threshold resolve_threshold() const {
        if (std::holds_alternative<Threshold>(budget_or_threshold))
            return std::get<Threshold>(budget_or_threshold);
        return calibrate_threshold(std::get<FalseAlarmBudget>(budget_or_threshold));
    }
};

struct EstimandSummary {
    std::string name;
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
    std::optional<double> theory;
    std::optional<double> z_score;
};

struct ReplicateFailure {
    std::size_t replicate_index = 0;
    std::string message;
};

struct ExperimentReport {
    explicit ExperimentReport(ExperimentConfig cfg) : config(std::move(cfg)) {}

    ExperimentConfig config;
    double threshold_c = 0.0;
    double theory_g = 0.0;
    double theory_h = 0.0;
    std::size_t n_replicates = 0;
    std::size_t n_stopped = 0;
    std::size_t n_failed = 0;
    double censor_rate = 0.0;
    std::vector<EstimandSummary> estimands;
    std::vector<double> stop_time_deciles;    // 10%..90% over stopped replicates
    std::vector<double> kl_at_stop_deciles;
    std::vector<ReplicateFailure> failures;
};

namespace detail {

struct ReplicateOutcome {
    enum class Status { stopped, censored, failed } status = Status::censored;
    double stop_time = 0.0;
    double kl_at_stop = 0.0;     // qv_u at stop / 2
    double minus_u = 0.0;
    double overshoot = 0.0;
    std::string error;
};

inline EstimandSummary summarize(std::string name, const std::vector<double>& xs,
                                 std::optional<double> theory) {
    EstimandSummary s;
    s.name = std::move(name);
    s.n = xs.size();
    if (xs.empty()) return s;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    s.mean = mean;
    s.std_error = xs.size() > 1
                      ? std::sqrt(ss / static_cast<double>(xs.size() - 1) /
                                  static_cast<double>(xs.size()))
                      : 0.0;
    s.theory = theory;
    if (theory && s.std_error > 0.0) s.z_score = (s.mean - *theory) / s.std_error;
    return s;
}

inline std::vector<double> deciles(std::vector<double> xs) {
    std::vector<double> out;
    if (xs.empty()) return out;
    std::sort(xs.begin(), xs.end());
    for (int d = 1; d <= 9; ++d) {
        const double pos = 0.1 * d * static_cast<double>(xs.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, xs.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        out.push_back(xs[lo] + frac * (xs[hi] - xs[lo]));
    }
    return out;
}

/// Executes the batch with the given per-replicate pipeline. Outcomes land
/// in a slot indexed by replicate, and aggregation walks the slots in index
/// order, so the report is independent of worker count and scheduling.
inline ExperimentReport
run_with_pipeline(const ExperimentConfig& config,
                  const std::function<ReplicateOutcome(std::size_t)>& pipeline) {
    config.validate();
    const Threshold threshold = config.resolve_threshold();

    std::vector<ReplicateOutcome> outcomes(config.replicates);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= config.replicates) return;
            try {
                outcomes[i] = pipeline(i);
            } catch (const std::exception& e) {
                outcomes[i].status = ReplicateOutcome::Status::failed;
                outcomes[i].error = e.what();
            }
        }
    };
    const unsigned nworkers =
        std::min<unsigned>(config.workers,
                           static_cast<unsigned>(std::max<std::size_t>(config.replicates, 1)));
    if (nworkers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nworkers);
        for (unsigned w = 0; w < nworkers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    ExperimentReport report{config};
    report.threshold_c = threshold.c;
    report.theory_g = g_fn(threshold.c);
    report.theory_h = h_fn(threshold.c);
    report.n_replicates = config.replicates;

    std::vector<double> kl, minus_u, wald_gap, stop_time, overshoot;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const ReplicateOutcome& o = outcomes[i];
        switch (o.status) {
            case ReplicateOutcome::Status::failed:
                ++report.n_failed;
                report.failures.push_back({i, o.error});
                break;
            case ReplicateOutcome::Status::censored:
                break;
            case ReplicateOutcome::Status::stopped:
                ++report.n_stopped;
                kl.push_back(o.kl_at_stop);
                minus_u.push_back(o.minus_u);
                wald_gap.push_back(o.minus_u - o.kl_at_stop);
                stop_time.push_back(o.stop_time);
                overshoot.push_back(o.overshoot);
                break;
        }
    }
    const std::size_t attempted = config.replicates - report.n_failed;
    report.censor_rate =
        attempted == 0 ? 0.0
                       : static_cast<double>(attempted - report.n_stopped) /
                             static_cast<double>(attempted);

    const bool pre = config.regime == Regime::pre_change;
    std::optional<double> stop_theory;
    if (config.drift.family == DriftFamily::polynomial && config.drift.theta != 0.0 &&
        std::abs(config.drift.alpha - (config.hurst.value() - 0.5)) < 1e-12) {
        const auto [delay, false_alarm] =
            lorden_characteristics_poly(config.hurst, config.drift.theta, threshold);
        stop_theory = pre ? false_alarm : delay;
    }

    report.estimands.push_back(
        summarize("kl_at_stop", kl, pre ? report.theory_h : report.theory_g));
    if (pre) {
        report.estimands.push_back(summarize("minus_u_at_stop", minus_u, report.theory_h));
        report.estimands.push_back(summarize("wald_gap", wald_gap, 0.0));
    }
    report.estimands.push_back(summarize("stop_time", stop_time, stop_theory));
    report.estimands.push_back(summarize("overshoot", overshoot, std::nullopt));
    report.stop_time_deciles = deciles(stop_time);
    report.kl_at_stop_deciles = deciles(kl);
    return report;
}

} // namespace detail

/// Samples noise, applies the regime, runs transform -> Q -> LLR -> CUSUM,
/// and aggregates the operating-characteristic estimands with standard
/// errors. Deterministic for a fixed master seed regardless of worker
/// count; a failing replicate is logged and skipped, never fatal.
inline ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    const Threshold threshold = config.resolve_threshold();
    const FgnSampler sampler(config.hurst, config.grid);

    std::optional<QTrace> shared_q;
    if (config.drift.family == DriftFamily::polynomial)
        shared_q = q_process_poly(config.hurst, config.drift.theta, config.drift.alpha,
                                  config.grid);

    auto pipeline = [&](std::size_t i) {
        SamplePath path = sampler.sample(Seed{config.master_seed, i});
        if (config.regime == Regime::post_change_at_zero) {
            path = inject_drift(path, config.drift, 0.0);
        } else {
            path.change_point = kTauInfinity;
            path.drift = config.drift;
        }
        const MartingaleTrace trace =
            fundamental_transform_fast(path, config.hurst, config.sigma);
        const QTrace& q = shared_q
                              ? *shared_q
                              : q_process_numeric(config.drift, path, config.hurst,
                                                  config.sigma);
        const LLRTrace llr = llr_trace(q, trace);
        const DetectionResult det = cusum_run(llr, threshold);

        detail::ReplicateOutcome out;
        if (det.stopped) {
            out.status = detail::ReplicateOutcome::Status::stopped;
            out.stop_time = *det.stop_time;
            out.kl_at_stop = 0.5 * *det.qv_at_stop;
            out.minus_u = -*det.u_at_stop;
            out.overshoot = *det.overshoot;
        }
        return out;
    };
    return detail::run_with_pipeline(config, pipeline);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const ExperimentConfig& config) {
    nlohmann::json j;
    j["hurst"] = config.hurst.value();
    nlohmann::json d;
    switch (config.drift.family) {
        case DriftFamily::polynomial:
            d["family"] = "polynomial";
            d["theta"] = config.drift.theta;
            d["alpha"] = config.drift.alpha;
            break;
        case DriftFamily::affine:
            d["family"] = "affine";
            d["c0"] = config.drift.c0;
            d["c1"] = config.drift.c1;
            break;
        case DriftFamily::bounded_power:
            d["family"] = "bounded_power";
            d["c0"] = config.drift.c0;
            d["c1"] = config.drift.c1;
            d["power"] = config.drift.power;
            break;
    }
    j["drift"] = d;
    if (config.sigma.is_constant())
        j["sigma"] = {{"family", "constant"}, {"value", config.sigma.constant_value()}};
    else
        j["sigma"] = {{"family", "tabulated"}, {"table", config.sigma.table()}};
    j["regime"] = to_string(config.regime);
    j["step"] = config.grid.step;
    j["count"] = config.grid.count;
    j["horizon"] = config.horizon;
    if (std::holds_alternative<FalseAlarmBudget>(config.budget_or_threshold))
        j["gamma"] = std::get<FalseAlarmBudget>(config.budget_or_threshold).gamma;
    else
        j["threshold"] = std::get<Threshold>(config.budget_or_threshold).c;
    j["replicates"] = config.replicates;
    j["master_seed"] = config.master_seed;
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    const auto& d = j.at("drift");
    DriftSpec drift = DriftSpec::polynomial(0.0, 0.0);
    const std::string family = d.at("family").get<std::string>();
    if (family == "polynomial")
        drift = DriftSpec::polynomial(d.at("theta").get<double>(), d.at("alpha").get<double>());
    else if (family == "affine")
        drift = DriftSpec::affine(d.at("c0").get<double>(), d.at("c1").get<double>());
    else if (family == "bounded_power")
        drift = DriftSpec::bounded_power(d.at("c0").get<double>(), d.at("c1").get<double>(),
                                         d.at("power").get<double>());
    else
        throw ConfigError("unknown drift family: " + family);

    VolatilitySpec sigma = VolatilitySpec::constant(1.0);
    if (j.at("sigma").at("family").get<std::string>() == "tabulated")
        sigma = VolatilitySpec::tabulated(j.at("sigma").at("table").get<std::vector<double>>());
    else
        sigma = VolatilitySpec::constant(j.at("sigma").at("value").get<double>());

    const std::string regime = j.at("regime").get<std::string>();
    if (regime != "pre_change" && regime != "post_change_at_zero")
        throw ConfigError("unknown regime: " + regime);

    Grid grid(j.at("step").get<double>(), j.at("count").get<std::size_t>());
    std::variant<FalseAlarmBudget, Threshold> bot = Threshold(1.0);
    if (j.contains("gamma"))
        bot = FalseAlarmBudget(j.at("gamma").get<double>());
    else
        bot = Threshold(j.at("threshold").get<double>());

    ExperimentConfig config{HurstIndex(j.at("hurst").get<double>()),
                            drift,
                            sigma,
                            regime == "pre_change" ? Regime::pre_change
                                                   : Regime::post_change_at_zero,
                            grid,
                            j.at("horizon").get<double>(),
                            bot,
                            j.at("replicates").get<std::size_t>(),
                            j.at("master_seed").get<std::uint64_t>(),
                            1};
    config.validate();
    return config;
}

inline nlohmann::json to_json(const ExperimentReport& report) {
    nlohmann::json j;
    j["config"] = to_json(report.config);
    j["threshold_c"] = report.threshold_c;
    j["theory"] = {{"g", report.theory_g}, {"h", report.theory_h}};
    j["n_replicates"] = report.n_replicates;
    j["n_stopped"] = report.n_stopped;
    j["n_failed"] = report.n_failed;
    j["censor_rate"] = report.censor_rate;
    nlohmann::json es = nlohmann::json::array();
    for (const EstimandSummary& e : report.estimands) {
        nlohmann::json je;
        je["name"] = e.name;
        je["mean"] = e.mean;
        je["std_error"] = e.std_error;
        je["n"] = e.n;
        if (e.theory) je["theory"] = *e.theory;
        if (e.z_score) je["z_score"] = *e.z_score;
        es.push_back(je);
    }
    j["estimands"] = es;
    j["stop_time_deciles"] = report.stop_time_deciles;
    j["kl_at_stop_deciles"] = report.kl_at_stop_deciles;
    nlohmann::json fs = nlohmann::json::array();
    for (const ReplicateFailure& f : report.failures)
        fs.push_back({{"replicate_index", f.replicate_index}, {"message", f.message}});
    j["failures"] = fs;
    return j;
}

inline ExperimentReport report_from_json(const nlohmann::json& j) {
    ExperimentReport r{config_from_json(j.at("config"))};
    r.threshold_c = j.at("threshold_c").get<double>();
    r.theory_g = j.at("theory").at("g").get<double>();
    r.theory_h = j.at("theory").at("h").get<double>();
    r.n_replicates = j.at("n_replicates").get<std::size_t>();
    r.n_stopped = j.at("n_stopped").get<std::size_t>();
    r.n_failed = j.at("n_failed").get<std::size_t>();
    r.censor_rate = j.at("censor_rate").get<double>();
    for (const auto& je : j.at("estimands")) {
        EstimandSummary e;
        e.name = je.at("name").get<std::string>();
        e.mean = je.at("mean").get<double>();
        e.std_error = je.at("std_error").get<double>();
        e.n = je.at("n").get<std::size_t>();
        if (je.contains("theory")) e.theory = je.at("theory").get<double>();
        if (je.contains("z_score")) e.z_score = je.at("z_score").get<double>();
        r.estimands.push_back(e);
    }
    r.stop_time_deciles = j.at("stop_time_deciles").get<std::vector<double>>();
    r.kl_at_stop_deciles = j.at("kl_at_stop_deciles").get<std::vector<double>>();
    for (const auto& jf : j.at("failures"))
        r.failures.push_back({jf.at("replicate_index").get<std::size_t>(),
                              jf.at("message").get<std::string>()});
    return r;
}

inline bool operator==(const ExperimentReport& a, const ExperimentReport& b) {
    return to_json(a) == to_json(b);
}

namespace detail {

inline std::string format_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

} // namespace detail

inline std::string report_to_csv(const ExperimentReport& report) {
    std::ostringstream os;
    os << "name,estimate,std_error,theory,z_score,n,censor_rate\n";
    for (const EstimandSummary& e : report.estimands) {
        os << e.name << ',' << detail::format_real(e.mean) << ','
           << detail::format_real(e.std_error) << ',';
        if (e.theory) os << detail::format_real(*e.theory);
        os << ',';
        if (e.z_score) os << detail::format_real(*e.z_score);
        os << ',' << e.n << ',' << detail::format_real(report.censor_rate) << '\n';
    }
    return os.str();
}

enum class ReportFormat { csv, json };

inline void write_report(const ExperimentReport& report, const std::string& destination,
                         ReportFormat format) {
    std::ofstream out(destination, std::ios::binary);
    if (!out) throw IoError("write_report: cannot open " + destination);
    if (format == ReportFormat::csv)
        out << report_to_csv(report);
    else
        out << to_json(report).dump(2) << '\n';
    if (!out) throw IoError("write_report: write failed for " + destination);
}

inline ExperimentReport read_report(const std::string& source) {
    std::ifstream in(source, std::ios::binary);
    if (!in) throw IoError("read_report: cannot open " + source);
    nlohmann::json j;
    in >> j;
    return report_from_json(j);
}

/// True iff reports for 1, 2 and hardware-many workers serialize to the
/// same bytes.
inline bool scheduling_invariance_check(ExperimentConfig config) {
    const unsigned hw = std::max(2u, std::thread::hardware_concurrency());
    std::vector<std::string> dumps;
    for (unsigned w : {1u, 2u, hw}) {
        config.workers = w;
        dumps.push_back(to_json(run_experiment(config)).dump());
    }
    return dumps[0] == dumps[1] && dumps[0] == dumps[2];
}

/// Censor rates of one batch evaluated at several horizons. All horizons
/// reuse the same full-length noise paths: stopping by a shorter horizon is
/// decided on a prefix of the path a longer horizon sees, which is what
/// makes censoring monotone in the horizon replicate by replicate.
inline std::vector<double> censor_rates_by_horizon(const ExperimentConfig& config,
                                                   const std::vector<std::size_t>& counts) {
    config.validate();
    const Threshold threshold = config.resolve_threshold();
    const FgnSampler sampler(config.hurst, config.grid);
    std::optional<QTrace> shared_q;
    if (config.drift.family == DriftFamily::polynomial)
        shared_q = q_process_poly(config.hurst, config.drift.theta, config.drift.alpha,
                                  config.grid);

    std::vector<std::size_t> censored(counts.size(), 0);
    for (std::size_t i = 0; i < config.replicates; ++i) {
        SamplePath path = sampler.sample(Seed{config.master_seed, i});
        if (config.regime == Regime::post_change_at_zero)
            path = inject_drift(path, config.drift, 0.0);
        const MartingaleTrace trace =
            fundamental_transform_fast(path, config.hurst, config.sigma);
        const QTrace& q = shared_q ? *shared_q
                                   : q_process_numeric(config.drift, path, config.hurst,
                                                       config.sigma);
        const DetectionResult det = cusum_run(llr_trace(q, trace), threshold);
        for (std::size_t k = 0; k < counts.size(); ++k)
            if (!det.stopped || *det.stop_index > counts[k]) ++censored[k];
    }
    std::vector<double> rates(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k)
        rates[k] = static_cast<double>(censored[k]) / static_cast<double>(config.replicates);
    return rates;
}

} // namespace fraccusum
