#pragma once

#include <cmath>
#include <vector>

#include "rulgp/cmapss.hpp"
#include "rulgp/common.hpp"

namespace rulgp {

/// Synthetic turbofan-like data for oracle tests: ground truth is known by
/// construction, no external files needed.
struct SynthConfig {
    int n_engines = 50;     // per set (training and testing)
    int t_f_min = 120;      // failure-time draw range, inclusive
    int t_f_max = 250;
    double noise_std = 0.05;
    int n_signal = 12;      // sensors carrying a degradation signature
    std::uint64_t seed = 7;
};

struct SynthData {
    TrajectorySet training;  // run-to-failure, labeled
    TrajectorySet testing;   // truncated, labeled from `truths`
    std::vector<double> truths;
};

namespace detail {

/// Per-feature personality, shared across engines of a dataset so the
/// feature-to-RUL mapping is learnable.
struct SynthFeature {
    enum class Role { signal, constant, noise } role = Role::constant;
    double base = 0.0;   // plateau level
    double amp = 0.0;    // growth amplitude (signed)
    double tau = 50.0;   // cycles-to-failure scale of the exponential onset
};

inline std::vector<SynthFeature> synth_features(const SynthConfig& cfg) {
    Rng rng(mix_seed(cfg.seed, 0));
    std::vector<SynthFeature> feats(kFeatureCount);
    int signals_left = cfg.n_signal;
    for (int j = 0; j < kFeatureCount; ++j) {
        SynthFeature f;
        f.base = rng.uniform(-1.0, 1.0);
        f.amp = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.8, 1.6);
        f.tau = rng.log_uniform(15.0, 200.0);
        if (j < 3) {
            f.role = SynthFeature::Role::noise;  // operational settings
        } else if (signals_left > 0) {
            f.role = SynthFeature::Role::signal;
            --signals_left;
        } else {
            f.role = (j % 2 == 0) ? SynthFeature::Role::constant : SynthFeature::Role::noise;
        }
        feats[j] = f;
    }
    return feats;
}

/// Signal features plateau at `base` and grow monotonically as failure
/// approaches: base + amp * exp(-(t_f - t)/tau). Values are quantized to
/// 1e-4 so the text round trip is exact.
inline EngineTrajectory synth_engine(int id, int t_f, const std::vector<SynthFeature>& feats,
                                     double noise_std, Rng& rng) {
    EngineTrajectory e;
    e.id = id;
    for (int t = 1; t <= t_f; ++t) {
        SensorRow row;
        row.engine_id = id;
        row.cycle = t;
        row.features.resize(kFeatureCount);
        for (int j = 0; j < kFeatureCount; ++j) {
            const auto& f = feats[j];
            double v = f.base;
            if (f.role == SynthFeature::Role::signal)
                v += f.amp * std::exp(-static_cast<double>(t_f - t) / f.tau);
            if (f.role != SynthFeature::Role::constant) v += noise_std * rng.normal();
            row.features[j] = std::round(v * 1e4) / 1e4;
        }
        e.rows.push_back(std::move(row));
    }
    return e;
}

}  // namespace detail

/// Deterministic generator: same configuration and seed give identical
/// datasets. Testing trajectories are truncated uniformly at random in
/// [30%, 90%] of the failure time (never below 5 cycles).
inline SynthData synth_generate(const SynthConfig& cfg) {
    if (cfg.n_engines < 1) throw InputError("synth_generate: need at least one engine");
    if (cfg.t_f_min < 5 || cfg.t_f_max < cfg.t_f_min)
        throw InputError("synth_generate: bad failure-time range");
    if (cfg.n_signal < 0 || cfg.n_signal > kFeatureCount - 3)
        throw InputError("synth_generate: bad signal feature count");

    const auto feats = detail::synth_features(cfg);
    SynthData data;
    data.training.kind = SetKind::training;
    data.testing.kind = SetKind::testing;

    for (int i = 0; i < cfg.n_engines; ++i) {
        Rng rng(mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(i)));
        const int t_f = rng.uniform_int(cfg.t_f_min, cfg.t_f_max);
        data.training.engines.push_back(
            detail::synth_engine(i + 1, t_f, feats, cfg.noise_std, rng));
    }
    data.training = attach_training_labels(std::move(data.training));

    for (int i = 0; i < cfg.n_engines; ++i) {
        Rng rng(mix_seed(cfg.seed, 2000 + static_cast<std::uint64_t>(i)));
        const int t_f = rng.uniform_int(cfg.t_f_min, cfg.t_f_max);
        EngineTrajectory full = detail::synth_engine(i + 1, t_f, feats, cfg.noise_std, rng);
        const int t_c =
            std::max(5, static_cast<int>(std::lround(t_f * rng.uniform(0.30, 0.90))));
        full.rows.resize(std::min<std::size_t>(full.rows.size(), t_c));
        full.final_rul = static_cast<double>(t_f - t_c);
        data.truths.push_back(*full.final_rul);
        data.testing.engines.push_back(std::move(full));
    }
    return data;
}

}  // namespace rulgp
