#pragma once

#include <cmath>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "rulgp/pipeline.hpp"
#include "rulgp/synthetic.hpp"

namespace rulgp {

/// Root mean square error over aligned prediction/truth pairs.
inline double rmse(const std::vector<double>& predictions, const std::vector<double>& truths) {
    if (predictions.empty()) throw InputError("rmse: empty input");
    if (predictions.size() != truths.size()) throw InputError("rmse: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double r = predictions[i] - truths[i];
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(predictions.size()));
}

/// One evaluated engine: prediction vs truth with its interval.
struct EngineResult {
    int engine_id = 0;
    double prediction = 0.0;
    double truth = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int t_c = 0;
    bool covered = false;
    bool degraded = false;
};

/// Fraction of truths inside their intervals.
inline double coverage(const std::vector<EngineResult>& results) {
    if (results.empty()) return 0.0;
    std::size_t inside = 0;
    for (const auto& r : results)
        if (r.ci_low <= r.truth && r.truth <= r.ci_high) ++inside;
    return static_cast<double>(inside) / static_cast<double>(results.size());
}

struct RulBucket {
    double lo = 0.0;  // bucket lower edge (inclusive)
    double rmse = 0.0;
    int count = 0;
};

/// Buckets engines by ground-truth RUL and reports RMSE per bucket. Empty
/// buckets are omitted; buckets are sorted by lower edge.
inline std::vector<RulBucket> rmse_by_rul_level(const std::vector<EngineResult>& results,
                                                double bucket_width = 25.0) {
    if (results.empty()) throw InputError("rmse_by_rul_level: empty input");
    if (!(bucket_width > 0)) throw InputError("rmse_by_rul_level: bucket width must be positive");
    std::map<long, std::pair<double, int>> acc;  // index -> (sum of squares, count)
    for (const auto& r : results) {
        const long idx = static_cast<long>(std::floor(r.truth / bucket_width));
        const double resid = r.prediction - r.truth;
        acc[idx].first += resid * resid;
        acc[idx].second += 1;
    }
    std::vector<RulBucket> out;
    for (const auto& [idx, sums] : acc)
        out.push_back({idx * bucket_width, std::sqrt(sums.first / sums.second), sums.second});
    return out;
}

struct EvalReport {
    PipelineVariant variant = PipelineVariant::full;
    double ci_level = 0.90;
    double rmse = 0.0;
    double coverage_rate = 0.0;
    double mean_ci_width = 0.0;
    std::vector<EngineResult> per_engine;
    std::vector<RulBucket> per_rul_bucket;
};

/// Joins predictions with the labeled testing set into a report.
inline EvalReport evaluate_predictions(const std::vector<RulPrediction>& predictions,
                                       const TrajectorySet& testing, double ci_level,
                                       PipelineVariant variant, double bucket_width = 25.0) {
    if (!testing.labeled()) throw DataError("evaluate: testing set has no RUL labels");

    EvalReport report;
    report.variant = variant;
    report.ci_level = ci_level;

    std::vector<double> preds, truths;
    double width_acc = 0.0;
    for (const auto& pr : predictions) {
        const EngineTrajectory* e = testing.find(pr.engine_id);
        if (e == nullptr || !e->final_rul)
            throw DataError("evaluate: prediction for unknown engine " +
                            std::to_string(pr.engine_id));
        EngineResult r;
        r.engine_id = pr.engine_id;
        r.prediction = pr.mean_rul;
        r.truth = *e->final_rul;
        r.ci_low = pr.ci_low;
        r.ci_high = pr.ci_high;
        r.t_c = pr.t_c;
        r.covered = pr.ci_low <= r.truth && r.truth <= pr.ci_high;
        r.degraded = pr.degraded;
        report.per_engine.push_back(r);
        preds.push_back(r.prediction);
        truths.push_back(r.truth);
        width_acc += pr.ci_high - pr.ci_low;
    }
    report.rmse = rmse(preds, truths);
    report.coverage_rate = coverage(report.per_engine);
    report.mean_ci_width = width_acc / static_cast<double>(predictions.size());
    report.per_rul_bucket = rmse_by_rul_level(report.per_engine, bucket_width);
    return report;
}

/// Full evaluation of a trained pipeline on a labeled testing set.
inline EvalReport run_evaluation(const TrainedPipeline& pipeline, const TrajectorySet& testing,
                                 double ci_level, PipelineVariant variant = PipelineVariant::full,
                                 double bucket_width = 25.0) {
    const auto predictions = predict_all(pipeline, testing, ci_level, variant);
    if (predictions.size() != testing.engines.size())
        throw DataError("evaluate: some engines failed to produce predictions");
    return evaluate_predictions(predictions, testing, ci_level, variant, bucket_width);
}

struct AblationReport {
    EvalReport full;
    EvalReport stationary_gpr;
    EvalReport dl_only;
};

/// Evaluates the three prediction paths with identical Phase-I artifacts:
/// one network training run, reused across variants.
inline AblationReport run_ablation(const TrajectorySet& training, const TrajectorySet& testing,
                                   const PipelineConfig& config, double bucket_width = 25.0) {
    const TrainedPipeline pipeline = train_phase1(training, config);
    AblationReport report;
    report.full = run_evaluation(pipeline, testing, config.ci_level, PipelineVariant::full,
                                 bucket_width);
    report.stationary_gpr = run_evaluation(pipeline, testing, config.ci_level,
                                           PipelineVariant::stationary_gpr, bucket_width);
    report.dl_only = run_evaluation(pipeline, testing, config.ci_level, PipelineVariant::dl_only,
                                    bucket_width);
    return report;
}

/// Per-trial RMSE over independently seeded end-to-end runs. Trial i swaps
/// only the seed; everything else is identical.
inline std::vector<double> run_robustness_seeds(const TrajectorySet& training,
                                                const TrajectorySet& testing,
                                                const std::vector<std::uint64_t>& seeds,
                                                PipelineConfig config) {
    std::vector<double> out;
    for (const std::uint64_t seed : seeds) {
        config.seed = seed;
        config.mlp.seed = seed;
        const TrainedPipeline pipeline = train_phase1(training, config);
        out.push_back(
            run_evaluation(pipeline, testing, config.ci_level, PipelineVariant::full).rmse);
    }
    return out;
}

inline std::vector<double> run_robustness(const TrajectorySet& training,
                                          const TrajectorySet& testing, int n_trials,
                                          std::uint64_t base_seed, const PipelineConfig& config) {
    if (n_trials < 2) throw InputError("run_robustness: need at least 2 trials");
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < n_trials; ++i) seeds.push_back(base_seed + static_cast<std::uint64_t>(i));
    return run_robustness_seeds(training, testing, seeds, config);
}

inline std::pair<double, double> mean_and_sample_std(const std::vector<double>& xs) {
    if (xs.empty()) throw InputError("mean_and_sample_std: empty input");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() == 1) return {mean, 0.0};
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    return {mean, std::sqrt(var)};
}

/// Published RMSE of competing predictors on the four turbofan subsets,
/// shipped as context for reports. These models are not implemented here.
struct ReferenceRmse {
    const char* model;
    double fd001, fd002, fd003, fd004;
};

inline const std::vector<ReferenceRmse>& reference_rmse_table() {
    static const std::vector<ReferenceRmse> table = {
        {"SVR", 21.0, 42.0, 21.0, 45.3},
        {"RVR", 23.8, 31.3, 22.4, 34.3},
        {"MLP", 37.6, 80.0, 37.4, 77.4},
        {"CNN", 18.5, 30.3, 19.8, 29.2},
        {"DW-RNN", 22.5, 25.9, 18.8, 24.4},
        {"MTL-RNN", 21.5, 25.8, 18.0, 22.8},
        {"LSTM", 16.1, 24.5, 16.2, 28.2},
        {"Semi-supervised", 12.56, 22.7, 12.1, 22.7},
    };
    return table;
}

}  // namespace rulgp
