#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rulgp/cmapss.hpp"
#include "rulgp/common.hpp"
#include "rulgp/mlp.hpp"
#include "rulgp/nsgpr.hpp"
#include "rulgp/svd_features.hpp"

namespace rulgp {

/// Everything that parameterizes a run. `seed` drives the network
/// initialization, the batch shuffling and the per-engine smoother restarts.
struct PipelineConfig {
    MlpHyperparams mlp;
    double svd_threshold = 0.9;
    double ci_level = 0.90;
    std::optional<double> rul_cap;  // off by default: pure linear target
    GprFitConfig gp;
    int gp_horizon = 500;  // failure-time search limit beyond t_c
    std::uint64_t seed = 42;
};

/// Which prediction path to run: the full smoother, the network alone, or
/// the smoother restricted to its stationary kernel.
enum class PipelineVariant { full, dl_only, stationary_gpr };

inline std::string to_string(PipelineVariant v) {
    switch (v) {
        case PipelineVariant::full: return "full";
        case PipelineVariant::dl_only: return "dl_only";
        case PipelineVariant::stationary_gpr: return "stationary_gpr";
    }
    return "?";
}

inline PipelineVariant variant_from_string(const std::string& s) {
    if (s == "full") return PipelineVariant::full;
    if (s == "dl_only") return PipelineVariant::dl_only;
    if (s == "stationary_gpr") return PipelineVariant::stationary_gpr;
    throw InputError("unknown variant '" + s + "' (full | dl_only | stationary_gpr)");
}

struct TrainedPipeline {
    NormStats stats;
    SvdBasis basis;
    TimeScaler time;
    MlpModel mlp;
    double train_residual_std = 0.0;  // network residual spread on the training rows
    PipelineConfig config;
};

/// Stochastic prediction for one engine at its truncation time.
struct RulPrediction {
    int engine_id = 0;
    int t_c = 0;
    double mean_rul = 0.0;
    double std = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::optional<int> predicted_failure_cycle;
    std::vector<std::pair<int, double>> dl_trajectory;
    bool degraded = false;  // smoother unavailable; network fallback with flat std
};

/// Central interval around a raw (possibly negative) mean. Negative remaining
/// life is meaningless, so mean and both bounds clamp at zero; clamping is
/// monotone, which preserves lo <= mean <= hi.
struct Interval {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

inline Interval clamped_interval(double raw_mean, double std, double ci_level) {
    if (std < 0) throw InputError("clamped_interval: negative std");
    const double z = two_sided_z(ci_level);
    Interval iv;
    iv.mean = std::max(0.0, raw_mean);
    iv.lo = std::max(0.0, raw_mean - z * std);
    iv.hi = std::max(0.0, raw_mean + z * std);
    return iv;
}

/// Phase I: normalization -> truncated SVD -> network training on
/// (projected features, standardized time) against the linear RUL labels.
inline TrainedPipeline train_phase1(const TrajectorySet& training, PipelineConfig config,
                                    TrainInfo* info = nullptr) {
    if (training.kind != SetKind::training)
        throw DataError("train_phase1: expected a training set");
    if (training.engines.empty()) throw InputError("train_phase1: empty set");
    for (const auto& e : training.engines)
        if (e.rul.size() != e.rows.size())
            throw DataError("train_phase1: engine " + std::to_string(e.id) +
                            " has no RUL labels (attach_training_labels first)");

    TrainedPipeline p;
    p.config = config;
    p.config.mlp.seed = config.seed;

    p.stats = fit_norm_stats(training);
    const TrajectorySet normed = apply_norm(training, p.stats);
    p.basis = fit_svd_centered(stack_features(normed), config.svd_threshold);

    const Eigen::Index n = static_cast<Eigen::Index>(training.total_rows());
    Eigen::VectorXd cycles(n);
    Eigen::VectorXd targets(n);
    {
        Eigen::Index r = 0;
        for (const auto& e : training.engines)
            for (std::size_t i = 0; i < e.rows.size(); ++i, ++r) {
                cycles[r] = e.rows[i].cycle;
                targets[r] = e.rul[i];
            }
    }
    p.time.mean = cycles.mean();
    const double tvar = (cycles.array() - p.time.mean).square().mean();
    p.time.std = tvar > 0 ? std::sqrt(tvar) : 1.0;

    Eigen::MatrixXd inputs(n, p.basis.rank + 1);
    inputs.leftCols(p.basis.rank) = project(stack_features(normed), p.basis);
    inputs.col(p.basis.rank) =
        cycles.unaryExpr([&](double c) { return p.time.scale(c); });

    p.mlp = train(inputs, targets, p.config.mlp, info);

    const Eigen::VectorXd resid = forward_batch(p.mlp, inputs) - targets;
    p.train_residual_std = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
    return p;
}

namespace detail {

/// Phase II inputs for one engine: cycles rescaled by the truncation time so
/// the smoother sees (0, 1], targets are the raw network RUL_t estimates.
/// Only the trajectory and the cycle index enter; sensor features do not.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> smoother_data(
    const std::vector<std::pair<int, double>>& trajectory, int t_c) {
    const Eigen::Index m = static_cast<Eigen::Index>(trajectory.size());
    Eigen::MatrixXd X(m, 1);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        X(i, 0) = static_cast<double>(trajectory[i].first) / t_c;
        y[i] = trajectory[i].second;
    }
    return {X, y};
}

inline GprFitConfig engine_gp_config(const TrainedPipeline& p, int engine_id,
                                     PipelineVariant variant) {
    GprFitConfig cfg = p.config.gp;
    cfg.kind = variant == PipelineVariant::stationary_gpr ? KernelKind::se_only
                                                          : KernelKind::combined;
    cfg.trend = TrendKind::quadratic;
    cfg.seed = mix_seed(p.config.seed, static_cast<std::uint64_t>(engine_id));
    return cfg;
}

}  // namespace detail

/// Phase II for one engine: smooths the incomplete RUL_t trajectory and
/// reports the posterior at the truncation time as a clamped Gaussian
/// interval. Engines too short for the quadratic trend, and smoother
/// failures, fall back to the network value with the training residual
/// spread and a degraded marker.
inline RulPrediction predict_engine(const TrainedPipeline& p, const EngineTrajectory& engine,
                                    double ci_level, PipelineVariant variant = PipelineVariant::full) {
    if (engine.rows.empty()) throw InputError("predict_engine: empty trajectory");

    RulPrediction out;
    out.engine_id = engine.id;
    out.t_c = engine.last_cycle();
    out.dl_trajectory = predict_trajectory(p.mlp, engine, p.basis, p.stats, p.time);

    const double dl_at_tc = out.dl_trajectory.back().second;

    auto fallback = [&](double std_dev, bool degraded) {
        const Interval iv = clamped_interval(dl_at_tc, std_dev, ci_level);
        out.mean_rul = iv.mean;
        out.std = std_dev;
        out.ci_low = iv.lo;
        out.ci_high = iv.hi;
        out.degraded = degraded;
        out.predicted_failure_cycle = out.t_c + static_cast<int>(std::lround(out.mean_rul));
    };

    if (variant == PipelineVariant::dl_only) {
        fallback(0.0, false);
        return out;
    }
    if (out.t_c < 3) {  // quadratic trend underdetermined
        fallback(p.train_residual_std, true);
        return out;
    }

    GprModel gp;
    try {
        const auto [X, y] = detail::smoother_data(out.dl_trajectory, out.t_c);
        gp = gp_fit(X, y, detail::engine_gp_config(p, engine.id, variant));
    } catch (const Error&) {
        fallback(p.train_residual_std, true);
        return out;
    }

    Eigen::VectorXd at_tc(1);
    at_tc << 1.0;
    const auto [mu, var] = gp_posterior(gp, at_tc);
    const double std_dev = std::sqrt(var);
    const Interval iv = clamped_interval(mu, std_dev, ci_level);
    out.mean_rul = iv.mean;
    out.std = std_dev;
    out.ci_low = iv.lo;
    out.ci_high = iv.hi;

    // extrapolate the posterior mean forward to its first non-positive cycle
    if (mu <= 0.0) {
        out.predicted_failure_cycle = out.t_c;
    } else {
        for (int t = out.t_c + 1; t <= out.t_c + p.config.gp_horizon; ++t) {
            Eigen::VectorXd x(1);
            x << static_cast<double>(t) / out.t_c;
            if (gp_posterior(gp, x).first <= 0.0) {
                out.predicted_failure_cycle = t;
                break;
            }
        }
    }
    return out;
}

/// First cycle beyond the truncation time at which the smoothed mean RUL
/// reaches zero; empty when there is no crossing within the horizon.
inline std::optional<int> extrapolate_failure(const TrainedPipeline& p,
                                              const EngineTrajectory& engine) {
    return predict_engine(p, engine, p.config.ci_level).predicted_failure_cycle;
}

/// One prediction per engine, ordered by engine id. Per-engine failures are
/// collected into `errors` (when given) instead of aborting the batch.
inline std::vector<RulPrediction> predict_all(
    const TrainedPipeline& p, const TrajectorySet& testing, double ci_level,
    PipelineVariant variant = PipelineVariant::full,
    std::vector<std::pair<int, std::string>>* errors = nullptr) {
    std::vector<const EngineTrajectory*> order;
    order.reserve(testing.engines.size());
    for (const auto& e : testing.engines) order.push_back(&e);
    std::sort(order.begin(), order.end(),
              [](const EngineTrajectory* a, const EngineTrajectory* b) { return a->id < b->id; });

    std::vector<RulPrediction> out;
    out.reserve(order.size());
    for (const EngineTrajectory* e : order) {
        try {
            out.push_back(predict_engine(p, *e, ci_level, variant));
        } catch (const Error& err) {
            if (errors) errors->emplace_back(e->id, err.what());
        }
    }
    return out;
}

}  // namespace rulgp
