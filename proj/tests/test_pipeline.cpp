#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "rulgp/evaluation.hpp"
#include "rulgp/model_io.hpp"
#include "rulgp/pipeline.hpp"
#include "rulgp/synthetic.hpp"
#include "test_util.hpp"

using namespace rulgp;

namespace {

PipelineConfig fast_config(std::uint64_t seed = 42) {
    PipelineConfig c;
    c.seed = seed;
    c.mlp.epochs = 400;
    c.gp.restarts = 3;
    c.gp.max_iters = 60;
    return c;
}

std::string serialized(const TrainedPipeline& p) {
    std::ostringstream os;
    save_pipeline(os, p);
    return os.str();
}

/// Pipeline whose network computes exactly T - t from the time input alone:
/// every sensor is ignored, the identity path stays on the positive branch of
/// the activation for t >= 0.
TrainedPipeline linear_time_pipeline(double failure_time) {
    TrainedPipeline p;
    p.config = fast_config();
    p.stats.mean = Eigen::VectorXd::Zero(kFeatureCount);
    p.stats.std = Eigen::VectorXd::Ones(kFeatureCount);
    p.basis.column_means = Eigen::VectorXd::Zero(kFeatureCount);
    p.basis.rank = 2;
    p.basis.singular_values = Eigen::VectorXd::Ones(2);
    p.basis.right_basis = Eigen::MatrixXd::Identity(kFeatureCount, 2);
    p.time.mean = 0.0;
    p.time.std = 1.0;

    MlpHyperparams tiny;
    tiny.h1 = tiny.h2 = tiny.h3 = 1;
    p.mlp = init_mlp(3, tiny);
    for (auto& w : p.mlp.weights) w.setZero();
    for (auto& b : p.mlp.biases) b.setZero();
    p.mlp.weights[0](0, 2) = 1.0;   // pick up the time input
    p.mlp.weights[1](0, 0) = 1.0;   // pass through (t stays >= 0)
    p.mlp.weights[2](0, 0) = 1.0;
    p.mlp.weights[3](0, 0) = -1.0;  // output = T - t
    p.mlp.biases[3][0] = failure_time;
    p.train_residual_std = 1.0;
    return p;
}

EngineTrajectory zero_engine(int id, int n_cycles) {
    auto ts = testutil::make_constant_set(SetKind::testing, {{id, n_cycles}});
    return ts.engines[0];
}

}  // namespace

TEST_CASE("clamped_interval reproduces the Gaussian quantile arithmetic", "[pipeline]") {
    SECTION("90% interval around mean 100, std 10") {
        const Interval iv = clamped_interval(100.0, 10.0, 0.90);
        CHECK(iv.mean == 100.0);
        CHECK(iv.lo == Catch::Approx(83.55).margin(0.01));
        CHECK(iv.hi == Catch::Approx(116.45).margin(0.01));
    }
    SECTION("zero std collapses to the mean") {
        const Interval iv = clamped_interval(42.0, 0.0, 0.90);
        CHECK(iv.lo == 42.0);
        CHECK(iv.hi == 42.0);
    }
    SECTION("clamping keeps lo <= mean <= hi") {
        const Interval iv = clamped_interval(-5.0, 3.0, 0.90);
        CHECK(iv.mean == 0.0);
        CHECK(iv.lo == 0.0);
        CHECK(iv.hi == 0.0);
        const Interval iv2 = clamped_interval(2.0, 30.0, 0.95);
        CHECK(iv2.lo == 0.0);
        CHECK(iv2.lo <= iv2.mean);
        CHECK(iv2.mean <= iv2.hi);
    }
    SECTION("width is strictly increasing in the confidence level") {
        const Interval a = clamped_interval(100.0, 10.0, 0.90);
        const Interval b = clamped_interval(100.0, 10.0, 0.95);
        CHECK(b.hi - b.lo > a.hi - a.lo);
        CHECK(two_sided_z(0.95) == Catch::Approx(1.9600).margin(5e-5));
        CHECK(two_sided_z(0.90) == Catch::Approx(1.6449).margin(5e-5));
    }
}

TEST_CASE("train_phase1 composes stats, basis and network consistently", "[pipeline][slow]") {
    SynthConfig synth;
    synth.n_engines = 5;
    synth.noise_std = 0.0;
    synth.seed = 19;
    const SynthData data = synth_generate(synth);

    const TrainedPipeline p = train_phase1(data.training, fast_config());

    SECTION("chosen rank satisfies the singular-mass rule, minimally") {
        const auto& s = p.basis.singular_values;
        const double total = s.sum();
        REQUIRE(s.head(p.basis.rank).sum() >= p.config.svd_threshold * total);
        if (p.basis.rank > 1)
            REQUIRE(s.head(p.basis.rank - 1).sum() < p.config.svd_threshold * total);
    }
    SECTION("network input width is rank + 1") {
        REQUIRE(p.mlp.input_dim() == p.basis.rank + 1);
    }
    SECTION("training residual is small on a clean linear-degradation set") {
        CHECK(p.train_residual_std < 2.0);
    }
    SECTION("same seed gives an identical pipeline") {
        const TrainedPipeline q = train_phase1(data.training, fast_config());
        REQUIRE(serialized(p) == serialized(q));
    }
    SECTION("model file round trip is exact") {
        const std::string bytes = serialized(p);
        std::istringstream in(bytes);
        const TrainedPipeline loaded = load_pipeline(in);
        REQUIRE(serialized(loaded) == bytes);

        // loaded model predicts identically
        const auto a = predict_engine(p, data.testing.engines[0], 0.9);
        const auto b = predict_engine(loaded, data.testing.engines[0], 0.9);
        REQUIRE(a.mean_rul == b.mean_rul);
        REQUIRE(a.std == b.std);
        REQUIRE(a.ci_low == b.ci_low);
        REQUIRE(a.ci_high == b.ci_high);
    }
}

TEST_CASE("train_phase1 validates its inputs", "[pipeline]") {
    SECTION("unlabeled training set") {
        auto ts = testutil::make_constant_set(SetKind::training, {{1, 30}});
        REQUIRE_THROWS_AS(train_phase1(ts, fast_config()), DataError);
    }
    SECTION("testing set") {
        auto ts = testutil::make_constant_set(SetKind::testing, {{1, 30}});
        REQUIRE_THROWS_AS(train_phase1(ts, fast_config()), DataError);
    }
}

TEST_CASE("predict_engine on an exactly linear trajectory", "[pipeline]") {
    const int t_c = 40;
    const double failure_time = 150.0;
    const TrainedPipeline p = linear_time_pipeline(failure_time);
    const EngineTrajectory engine = zero_engine(1, t_c);

    const RulPrediction pred = predict_engine(p, engine, 0.90);

    SECTION("the trajectory is one estimate per cycle") {
        REQUIRE(pred.dl_trajectory.size() == static_cast<std::size_t>(t_c));
        CHECK(pred.dl_trajectory.front().second == Catch::Approx(failure_time - 1));
        CHECK(pred.dl_trajectory.back().second == Catch::Approx(failure_time - t_c));
    }
    SECTION("the reported mean is the smoothed value at t_c") {
        CHECK(pred.t_c == t_c);
        CHECK(pred.mean_rul == Catch::Approx(failure_time - t_c).margin(1e-5));
        CHECK_FALSE(pred.degraded);
    }
    SECTION("failure is extrapolated to exactly t_c + mean RUL") {
        REQUIRE(pred.predicted_failure_cycle.has_value());
        CHECK(*pred.predicted_failure_cycle ==
              t_c + static_cast<int>(std::lround(pred.mean_rul)));
        CHECK(*pred.predicted_failure_cycle == static_cast<int>(failure_time));
    }
}

TEST_CASE("extrapolation boundary: already-failed trajectory returns t_c", "[pipeline]") {
    const int t_c = 25;
    const TrainedPipeline p = linear_time_pipeline(static_cast<double>(t_c));
    const RulPrediction pred = predict_engine(p, zero_engine(1, t_c), 0.90);
    CHECK(pred.mean_rul == Catch::Approx(0.0).margin(1e-6));
    REQUIRE(pred.predicted_failure_cycle.has_value());
    CHECK(*pred.predicted_failure_cycle == t_c);
}

TEST_CASE("engines shorter than three cycles fall back to the network", "[pipeline]") {
    const TrainedPipeline p = linear_time_pipeline(100.0);
    const RulPrediction pred = predict_engine(p, zero_engine(1, 2), 0.90);
    CHECK(pred.degraded);
    CHECK(pred.std == p.train_residual_std);
    CHECK(pred.mean_rul == Catch::Approx(98.0));
    CHECK(pred.ci_low <= pred.mean_rul);
    CHECK(pred.mean_rul <= pred.ci_high);
}

TEST_CASE("dl_only variant reports the last network value with no spread", "[pipeline]") {
    const TrainedPipeline p = linear_time_pipeline(120.0);
    const RulPrediction pred =
        predict_engine(p, zero_engine(1, 30), 0.90, PipelineVariant::dl_only);
    CHECK(pred.mean_rul == Catch::Approx(90.0));
    CHECK(pred.std == 0.0);
    CHECK(pred.ci_low == pred.ci_high);
    CHECK_FALSE(pred.degraded);
}

TEST_CASE("predict_all is an ordered batch of per-engine calls", "[pipeline]") {
    const TrainedPipeline p = linear_time_pipeline(90.0);

    SECTION("empty testing set gives an empty list") {
        TrajectorySet empty;
        empty.kind = SetKind::testing;
        CHECK(predict_all(p, empty, 0.9).empty());
    }
    SECTION("batch equals per-engine and is ordered by engine id") {
        auto ts = testutil::make_constant_set(SetKind::testing, {{9, 20}, {2, 35}, {5, 12}});
        const auto batch = predict_all(p, ts, 0.9);
        REQUIRE(batch.size() == 3);
        CHECK(batch[0].engine_id == 2);
        CHECK(batch[1].engine_id == 5);
        CHECK(batch[2].engine_id == 9);
        for (const auto& b : batch) {
            const auto single = predict_engine(p, *ts.find(b.engine_id), 0.9);
            REQUIRE(b.mean_rul == single.mean_rul);
            REQUIRE(b.std == single.std);
        }
    }
    SECTION("per-engine failures are collected, not fatal") {
        auto ts = testutil::make_constant_set(SetKind::testing, {{1, 20}, {2, 15}});
        ts.engines[1].rows.clear();  // unusable engine
        std::vector<std::pair<int, std::string>> errors;
        const auto batch = predict_all(p, ts, 0.9, PipelineVariant::full, &errors);
        CHECK(batch.size() == 1);
        REQUIRE(errors.size() == 1);
        CHECK(errors[0].first == 2);
    }
}

TEST_CASE("model file rejects foreign or stale content", "[pipeline]") {
    SECTION("missing tag") {
        std::istringstream in("something else\n");
        REQUIRE_THROWS_AS(load_pipeline(in), ParseError);
    }
    SECTION("unsupported version") {
        std::istringstream in("rulgp-model v9\n");
        REQUIRE_THROWS_AS(load_pipeline(in), ParseError);
    }
}
