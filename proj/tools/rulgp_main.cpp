// Command-line front end: train, predict, evaluate, ablate, robustness and
// synth subcommands over flat key-value config files.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rulgp/config.hpp"
#include "rulgp/evaluation.hpp"
#include "rulgp/model_io.hpp"
#include "rulgp/report.hpp"
#include "rulgp/synthetic.hpp"

namespace {

using namespace rulgp;

struct CliArgs {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value
};

RunConfig resolve_config(const CliArgs& args) {
    RunConfig config;
    if (!args.config_path.empty()) config = parse_config_file(args.config_path);
    for (const auto& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        apply_config_entry(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    validate_config(config);
    return config;
}

std::string out_path(const RunConfig& config, const std::string& name) {
    return (std::filesystem::path(config.output_dir) / name).string();
}

TrajectorySet load_training(const RunConfig& config) {
    if (config.train_file.empty()) throw ConfigError("train_file is not set");
    TrajectorySet ts = parse_trajectories_file(config.train_file, SetKind::training);
    ts = attach_training_labels(std::move(ts), config.pipeline.rul_cap);
    if (config.preset == "sec4c") ts = filter_engines(ts, 1, 60);
    return ts;
}

TrajectorySet load_testing(const RunConfig& config, bool require_labels) {
    if (config.test_file.empty()) throw ConfigError("test_file is not set");
    TrajectorySet ts = parse_trajectories_file(config.test_file, SetKind::testing);
    if (!config.rul_file.empty()) ts = attach_testing_labels_file(std::move(ts), config.rul_file);
    else if (require_labels) throw ConfigError("rul_file is not set (needed for evaluation)");
    if (config.preset == "sec4c") {
        ts = filter_engines(ts, 81, 100);
        ts = truncate_testing_at(std::move(ts), 50);
    }
    return ts;
}

/// The comparison protocol preset pins its own interval level.
double effective_ci_level(const RunConfig& config) {
    return config.preset == "sec4c" ? 0.95 : config.pipeline.ci_level;
}

/// The smoother runs at prediction time, so its settings (and the run seed
/// driving its restarts) come from the current command, not from the config
/// stored in the model file.
TrainedPipeline with_prediction_config(TrainedPipeline pipeline, const RunConfig& config) {
    pipeline.config.gp = config.pipeline.gp;
    pipeline.config.gp_horizon = config.pipeline.gp_horizon;
    pipeline.config.seed = config.pipeline.seed;
    pipeline.config.ci_level = effective_ci_level(config);
    return pipeline;
}

TrainedPipeline train_and_save(const RunConfig& config) {
    const TrajectorySet training = load_training(config);
    PipelineConfig pc = config.pipeline;
    pc.ci_level = effective_ci_level(config);

    const auto t0 = std::chrono::steady_clock::now();
    TrainInfo info;
    const TrainedPipeline pipeline = train_phase1(training, pc, &info);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    save_pipeline_file(config.model_file, pipeline);
    std::cout << "engines " << training.engines.size() << '\n'
              << "rows " << training.total_rows() << '\n'
              << "svd_rank " << pipeline.basis.rank << '\n'
              << "initial_loss " << info.initial_loss << '\n'
              << "final_loss " << info.final_loss << '\n'
              << "train_residual_std " << pipeline.train_residual_std << '\n'
              << "elapsed_seconds " << seconds << '\n'
              << "model_file " << config.model_file << '\n';
    return pipeline;
}

int cmd_train(const CliArgs& args) {
    (void)train_and_save(resolve_config(args));
    return 0;
}

int cmd_predict(const CliArgs& args) {
    const RunConfig config = resolve_config(args);
    const TrainedPipeline pipeline =
        with_prediction_config(load_pipeline_file(config.model_file), config);
    const TrajectorySet testing = load_testing(config, /*require_labels=*/false);

    std::vector<std::pair<int, std::string>> errors;
    const auto predictions = predict_all(pipeline, testing, effective_ci_level(config),
                                         variant_from_string(config.variant), &errors);
    for (const auto& [id, what] : errors)
        std::cerr << "engine " << id << ": " << what << '\n';

    const std::string path = out_path(config, "predictions.txt");
    write_text_file(path, render_predictions_report(config, predictions));
    std::cout << "predictions " << predictions.size() << '\n' << "report_file " << path << '\n';
    return errors.empty() ? 0 : 2;
}

int cmd_evaluate(const CliArgs& args) {
    const RunConfig config = resolve_config(args);

    // The comparison preset is a self-contained experiment: it trains its
    // own subset model so the artifacts can never disagree with the split.
    const TrainedPipeline pipeline = with_prediction_config(
        config.preset == "sec4c" ? train_and_save(config)
                                 : load_pipeline_file(config.model_file),
        config);
    const TrajectorySet testing = load_testing(config, /*require_labels=*/true);

    const EvalReport report =
        run_evaluation(pipeline, testing, effective_ci_level(config),
                       variant_from_string(config.variant), config.bucket_width);

    const std::string path = out_path(config, "evaluate_report.txt");
    write_text_file(path, render_eval_report(config, report));
    std::cout << "n_engines " << report.per_engine.size() << '\n'
              << "rmse " << report.rmse << '\n'
              << "coverage_rate " << report.coverage_rate << '\n'
              << "mean_ci_width " << report.mean_ci_width << '\n'
              << "report_file " << path << '\n';
    return 0;
}

int cmd_ablate(const CliArgs& args) {
    const RunConfig config = resolve_config(args);
    const TrajectorySet training = load_training(config);
    const TrajectorySet testing = load_testing(config, /*require_labels=*/true);

    PipelineConfig pc = config.pipeline;
    pc.ci_level = effective_ci_level(config);
    const AblationReport report = run_ablation(training, testing, pc, config.bucket_width);

    const std::string path = out_path(config, "ablate_report.txt");
    write_text_file(path, render_ablation_report(config, report));
    std::cout << "rmse_dl_only " << report.dl_only.rmse << '\n'
              << "rmse_stationary_gpr " << report.stationary_gpr.rmse << '\n'
              << "rmse_full " << report.full.rmse << '\n'
              << "report_file " << path << '\n';
    return 0;
}

int cmd_robustness(const CliArgs& args) {
    const RunConfig config = resolve_config(args);
    const TrajectorySet training = load_training(config);
    const TrajectorySet testing = load_testing(config, /*require_labels=*/true);

    const auto rmses = run_robustness(training, testing, config.n_trials, config.pipeline.seed,
                                      config.pipeline);
    std::vector<std::pair<std::uint64_t, double>> trials;
    for (std::size_t i = 0; i < rmses.size(); ++i)
        trials.emplace_back(config.pipeline.seed + i, rmses[i]);

    const std::string path = out_path(config, "robustness_report.txt");
    write_text_file(path, render_robustness_report(config, trials));
    const auto [mean, std] = mean_and_sample_std(rmses);
    std::cout << "n_trials " << rmses.size() << '\n'
              << "rmse_mean " << mean << '\n'
              << "rmse_std " << std << '\n'
              << "report_file " << path << '\n';
    return 0;
}

int cmd_synth(const CliArgs& args) {
    const RunConfig config = resolve_config(args);
    const SynthData data = synth_generate(config.synth);

    std::ostringstream train_text, test_text, rul_text;
    write_trajectories(train_text, data.training);
    write_trajectories(test_text, data.testing);
    for (const double truth : data.truths) rul_text << static_cast<long>(truth) << '\n';

    const std::string train_path = out_path(config, "synth_train.txt");
    const std::string test_path = out_path(config, "synth_test.txt");
    const std::string rul_path = out_path(config, "synth_rul.txt");
    write_text_file(train_path, train_text.str());
    write_text_file(test_path, test_text.str());
    write_text_file(rul_path, rul_text.str());

    std::cout << "engines " << data.training.engines.size() << '\n'
              << "train_rows " << data.training.total_rows() << '\n'
              << "test_rows " << data.testing.total_rows() << '\n'
              << "train_file " << train_path << '\n'
              << "test_file " << test_path << '\n'
              << "rul_file " << rul_path << '\n';
    return 0;
}

void add_common(CLI::App* cmd, CliArgs& args) {
    cmd->add_option("-c,--config", args.config_path, "flat key-value config file");
    cmd->add_option("--set", args.overrides, "override a config key (key=value, repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"turbofan remaining-useful-life prediction pipeline"};
    app.require_subcommand(1);

    CliArgs args;
    int (*handler)(const CliArgs&) = nullptr;

    for (const auto& [name, desc, fn] :
         std::vector<std::tuple<const char*, const char*, int (*)(const CliArgs&)>>{
             {"train", "fit the feature basis and the network, write the model file", cmd_train},
             {"predict", "load a model and predict a testing set", cmd_predict},
             {"evaluate", "score predictions against ground-truth labels", cmd_evaluate},
             {"ablate", "compare full, stationary and network-only variants", cmd_ablate},
             {"robustness", "re-run training across seeds and summarize the spread",
              cmd_robustness},
             {"synth", "generate a synthetic dataset with known ground truth", cmd_synth}}) {
        CLI::App* cmd = app.add_subcommand(name, desc);
        add_common(cmd, args);
        cmd->callback([&handler, fn]() { handler = fn; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        return handler(args);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
