#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rulgp/pipeline.hpp"
#include "rulgp/synthetic.hpp"

namespace rulgp {

/// Raised for bad configuration keys or values; the CLI maps it to the
/// usage/config exit code.
struct ConfigError : Error {
    using Error::Error;
};

/// Resolved run configuration: data paths, pipeline hyperparameters and the
/// experiment knobs, all settable from a flat key-value file or command-line
/// overrides.
struct RunConfig {
    // paths
    std::string train_file;
    std::string test_file;
    std::string rul_file;
    std::string model_file = "model.rulgp";
    std::string output_dir = ".";

    PipelineConfig pipeline;

    // evaluation / experiments
    double bucket_width = 25.0;
    std::string variant = "full";
    int n_trials = 10;
    std::string preset;  // "" or "sec4c"

    SynthConfig synth;
};

namespace detail {

inline double to_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0' || !std::isfinite(v))
        throw ConfigError("config: bad numeric value for '" + key + "': " + value);
    return v;
}

inline long to_long(const std::string& key, const std::string& value) {
    const double v = to_double(key, value);
    const long l = static_cast<long>(v);
    if (static_cast<double>(l) != v)
        throw ConfigError("config: expected an integer for '" + key + "': " + value);
    return l;
}

inline bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "on" || value == "1") return true;
    if (value == "false" || value == "off" || value == "0") return false;
    throw ConfigError("config: expected true/false for '" + key + "': " + value);
}

}  // namespace detail

/// Applies one key/value pair. Unknown keys are errors so typos surface
/// immediately.
inline void apply_config_entry(RunConfig& c, const std::string& key, const std::string& value) {
    using detail::to_bool;
    using detail::to_double;
    using detail::to_long;

    if (key == "train_file") c.train_file = value;
    else if (key == "test_file") c.test_file = value;
    else if (key == "rul_file") c.rul_file = value;
    else if (key == "model_file") c.model_file = value;
    else if (key == "output_dir") c.output_dir = value;
    else if (key == "seed") {
        c.pipeline.seed = static_cast<std::uint64_t>(to_long(key, value));
        c.pipeline.mlp.seed = c.pipeline.seed;
    } else if (key == "svd_threshold") c.pipeline.svd_threshold = to_double(key, value);
    else if (key == "ci_level") c.pipeline.ci_level = to_double(key, value);
    else if (key == "rul_cap") {
        if (value == "none" || value == "off") c.pipeline.rul_cap.reset();
        else c.pipeline.rul_cap = to_double(key, value);
    } else if (key == "lr") c.pipeline.mlp.lr = to_double(key, value);
    else if (key == "lambda") c.pipeline.mlp.lambda = to_double(key, value);
    else if (key == "alpha") c.pipeline.mlp.alpha = to_double(key, value);
    else if (key == "h1") c.pipeline.mlp.h1 = static_cast<int>(to_long(key, value));
    else if (key == "h2") c.pipeline.mlp.h2 = static_cast<int>(to_long(key, value));
    else if (key == "h3") c.pipeline.mlp.h3 = static_cast<int>(to_long(key, value));
    else if (key == "epochs") c.pipeline.mlp.epochs = static_cast<int>(to_long(key, value));
    else if (key == "batch_size") c.pipeline.mlp.batch_size = static_cast<int>(to_long(key, value));
    else if (key == "gp_restarts") c.pipeline.gp.restarts = static_cast<int>(to_long(key, value));
    else if (key == "gp_max_iters") c.pipeline.gp.max_iters = static_cast<int>(to_long(key, value));
    else if (key == "gp_step") c.pipeline.gp.step = to_double(key, value);
    else if (key == "gp_theta_lo") c.pipeline.gp.theta_lo = to_double(key, value);
    else if (key == "gp_theta_hi") c.pipeline.gp.theta_hi = to_double(key, value);
    else if (key == "gp_sigma2_lo") c.pipeline.gp.sigma2_lo = to_double(key, value);
    else if (key == "gp_sigma2_hi") c.pipeline.gp.sigma2_hi = to_double(key, value);
    else if (key == "gp_sigma02_lo") c.pipeline.gp.sigma02_lo = to_double(key, value);
    else if (key == "gp_sigma02_hi") c.pipeline.gp.sigma02_hi = to_double(key, value);
    else if (key == "gp_noise_lo") c.pipeline.gp.noise_lo = to_double(key, value);
    else if (key == "gp_noise_hi") c.pipeline.gp.noise_hi = to_double(key, value);
    else if (key == "gp_horizon") c.pipeline.gp_horizon = static_cast<int>(to_long(key, value));
    else if (key == "bucket_width") c.bucket_width = to_double(key, value);
    else if (key == "variant") c.variant = value;
    else if (key == "n_trials") c.n_trials = static_cast<int>(to_long(key, value));
    else if (key == "preset") c.preset = (value == "none" ? "" : value);
    else if (key == "synth_engines") c.synth.n_engines = static_cast<int>(to_long(key, value));
    else if (key == "synth_tf_min") c.synth.t_f_min = static_cast<int>(to_long(key, value));
    else if (key == "synth_tf_max") c.synth.t_f_max = static_cast<int>(to_long(key, value));
    else if (key == "synth_noise_std") c.synth.noise_std = to_double(key, value);
    else if (key == "synth_signal_features") c.synth.n_signal = static_cast<int>(to_long(key, value));
    else if (key == "synth_seed") c.synth.seed = static_cast<std::uint64_t>(to_long(key, value));
    else throw ConfigError("config: unknown key '" + key + "'");
}

/// Flat key-value text: one `key value` pair per line, '#' starts a comment.
inline RunConfig parse_config(std::istream& in, RunConfig base = RunConfig{}) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        std::string value;
        std::getline(ls, value);
        value.erase(0, value.find_first_not_of(" \t"));
        value.erase(value.find_last_not_of(" \t\r") + 1);
        if (value.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": key '" + key +
                              "' has no value");
        apply_config_entry(base, key, value);
    }
    return base;
}

inline RunConfig parse_config_file(const std::string& path, RunConfig base = RunConfig{}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in, std::move(base));
}

inline void validate_config(const RunConfig& c) {
    if (!(c.pipeline.ci_level > 0.0 && c.pipeline.ci_level < 1.0))
        throw ConfigError("config: ci_level must be in (0, 1)");
    if (!(c.pipeline.svd_threshold > 0.0 && c.pipeline.svd_threshold <= 1.0))
        throw ConfigError("config: svd_threshold must be in (0, 1]");
    if (!(c.bucket_width > 0)) throw ConfigError("config: bucket_width must be positive");
    if (!c.preset.empty() && c.preset != "sec4c")
        throw ConfigError("config: unknown preset '" + c.preset + "' (none | sec4c)");
    (void)variant_from_string(c.variant);
    c.pipeline.mlp.validate();
}

}  // namespace rulgp
