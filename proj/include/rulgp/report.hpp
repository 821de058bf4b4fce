#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rulgp/config.hpp"
#include "rulgp/evaluation.hpp"
#include "rulgp/model_io.hpp"

namespace rulgp {

constexpr const char* kReportFormatTag = "rulgp-report";
constexpr const char* kReportFormatVersion = "v1";

namespace detail {

/// Report number format: stable, diffable, enough digits to reproduce plots.
inline std::string rfmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace detail

/// The exact resolved configuration a report was produced from.
inline void write_run_config(std::ostream& out, const RunConfig& c) {
    out << "[config]\n";
    out << "train_file " << (c.train_file.empty() ? "none" : c.train_file) << '\n';
    out << "test_file " << (c.test_file.empty() ? "none" : c.test_file) << '\n';
    out << "rul_file " << (c.rul_file.empty() ? "none" : c.rul_file) << '\n';
    out << "model_file " << c.model_file << '\n';
    out << "output_dir " << c.output_dir << '\n';
    write_pipeline_config(out, c.pipeline);
    out << "bucket_width " << detail::rfmt(c.bucket_width) << '\n';
    out << "variant " << c.variant << '\n';
    out << "n_trials " << c.n_trials << '\n';
    out << "preset " << (c.preset.empty() ? "none" : c.preset) << '\n';
    out << "synth_engines " << c.synth.n_engines << '\n';
    out << "synth_tf_min " << c.synth.t_f_min << '\n';
    out << "synth_tf_max " << c.synth.t_f_max << '\n';
    out << "synth_noise_std " << detail::rfmt(c.synth.noise_std) << '\n';
    out << "synth_signal_features " << c.synth.n_signal << '\n';
    out << "synth_seed " << c.synth.seed << '\n';
}

inline void write_report_header(std::ostream& out, const std::string& command,
                                const RunConfig& config) {
    out << kReportFormatTag << ' ' << kReportFormatVersion << '\n';
    out << "command " << command << '\n';
    write_run_config(out, config);
}

inline void write_eval_sections(std::ostream& out, const EvalReport& report) {
    using detail::rfmt;
    int degraded = 0;
    for (const auto& r : report.per_engine) degraded += r.degraded ? 1 : 0;

    out << "[summary]\n";
    out << "variant " << to_string(report.variant) << '\n';
    out << "n_engines " << report.per_engine.size() << '\n';
    out << "rmse " << rfmt(report.rmse) << '\n';
    out << "coverage_rate " << rfmt(report.coverage_rate) << '\n';
    out << "ci_level " << rfmt(report.ci_level) << '\n';
    out << "mean_ci_width " << rfmt(report.mean_ci_width) << '\n';
    out << "degraded_engines " << degraded << '\n';

    out << "[per_rul_bucket]\n";
    out << "bucket_lo rmse count\n";
    for (const auto& b : report.per_rul_bucket)
        out << rfmt(b.lo) << ' ' << rfmt(b.rmse) << ' ' << b.count << '\n';

    out << "[per_engine]\n";
    out << "engine_id rul_prediction ground_truth ci_low ci_high truncation_cycle\n";
    for (const auto& r : report.per_engine)
        out << r.engine_id << ' ' << rfmt(r.prediction) << ' ' << rfmt(r.truth) << ' '
            << rfmt(r.ci_low) << ' ' << rfmt(r.ci_high) << ' ' << r.t_c << '\n';
}

inline void write_reference_rmse(std::ostream& out) {
    out << "[reference_rmse]\n";
    out << "model fd001 fd002 fd003 fd004\n";
    for (const auto& row : reference_rmse_table())
        out << row.model << ' ' << detail::rfmt(row.fd001) << ' ' << detail::rfmt(row.fd002)
            << ' ' << detail::rfmt(row.fd003) << ' ' << detail::rfmt(row.fd004) << '\n';
}

inline std::string render_eval_report(const RunConfig& config, const EvalReport& report) {
    std::ostringstream out;
    write_report_header(out, "evaluate", config);
    write_eval_sections(out, report);
    write_reference_rmse(out);
    out << "end\n";
    return out.str();
}

inline std::string render_predictions_report(const RunConfig& config,
                                             const std::vector<RulPrediction>& predictions) {
    using detail::rfmt;
    std::ostringstream out;
    write_report_header(out, "predict", config);
    out << "[predictions]\n";
    out << "engine_id rul_prediction std ci_low ci_high truncation_cycle "
           "predicted_failure_cycle degraded\n";
    for (const auto& p : predictions) {
        out << p.engine_id << ' ' << rfmt(p.mean_rul) << ' ' << rfmt(p.std) << ' '
            << rfmt(p.ci_low) << ' ' << rfmt(p.ci_high) << ' ' << p.t_c << ' ';
        if (p.predicted_failure_cycle) out << *p.predicted_failure_cycle;
        else out << "none";
        out << ' ' << (p.degraded ? 1 : 0) << '\n';
    }
    out << "end\n";
    return out.str();
}

inline std::string render_ablation_report(const RunConfig& config, const AblationReport& report) {
    using detail::rfmt;
    std::ostringstream out;
    write_report_header(out, "ablate", config);
    out << "[ablation]\n";
    out << "variant rmse coverage_rate mean_ci_width\n";
    for (const EvalReport* r : {&report.dl_only, &report.stationary_gpr, &report.full})
        out << to_string(r->variant) << ' ' << rfmt(r->rmse) << ' ' << rfmt(r->coverage_rate)
            << ' ' << rfmt(r->mean_ci_width) << '\n';
    out << "ordering_holds "
        << ((report.dl_only.rmse > report.stationary_gpr.rmse &&
             report.stationary_gpr.rmse > report.full.rmse)
                ? 1
                : 0)
        << '\n';
    for (const EvalReport* r : {&report.full, &report.stationary_gpr, &report.dl_only}) {
        out << "[variant " << to_string(r->variant) << "]\n";
        write_eval_sections(out, *r);
    }
    out << "end\n";
    return out.str();
}

inline std::string render_robustness_report(
    const RunConfig& config, const std::vector<std::pair<std::uint64_t, double>>& trials) {
    using detail::rfmt;
    std::ostringstream out;
    write_report_header(out, "robustness", config);
    out << "[trials]\n";
    out << "seed rmse\n";
    std::vector<double> rmses;
    for (const auto& [seed, value] : trials) {
        out << seed << ' ' << rfmt(value) << '\n';
        rmses.push_back(value);
    }
    const auto [mean, std] = mean_and_sample_std(rmses);
    out << "[summary]\n";
    out << "n_trials " << trials.size() << '\n';
    out << "rmse_mean " << rfmt(mean) << '\n';
    out << "rmse_std " << rfmt(std) << '\n';
    out << "rmse_std_over_mean " << rfmt(mean > 0 ? std / mean : 0.0) << '\n';
    out << "end\n";
    return out.str();
}

/// Whole-string write: the report is fully rendered before the file is
/// opened, so failed runs leave no partial report behind.
inline void write_text_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path);
    out << content;
    if (!out) throw InputError("failed writing file: " + path);
}

}  // namespace rulgp
