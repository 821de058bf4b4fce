#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "rulgp/pipeline.hpp"

namespace rulgp {

namespace detail {

/// %.17g round-trips every double exactly through strtod.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_vector(std::ostream& out, const std::string& key, const Eigen::VectorXd& v) {
    out << key << ' ' << v.size();
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << fmt(v[i]);
    out << '\n';
}

inline void write_matrix(std::ostream& out, const std::string& key, const Eigen::MatrixXd& m) {
    out << key << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << fmt(m(i, j));
        out << '\n';
    }
}

inline void expect_key(std::istream& in, const std::string& key) {
    std::string tok;
    if (!(in >> tok) || tok != key)
        throw ParseError("model file: expected '" + key + "', got '" + tok + "'");
}

inline double read_double(std::istream& in, const std::string& key) {
    expect_key(in, key);
    double v;
    if (!(in >> v)) throw ParseError("model file: bad value for '" + key + "'");
    return v;
}

inline long read_long(std::istream& in, const std::string& key) {
    expect_key(in, key);
    long v;
    if (!(in >> v)) throw ParseError("model file: bad value for '" + key + "'");
    return v;
}

inline Eigen::VectorXd read_vector(std::istream& in, const std::string& key) {
    expect_key(in, key);
    Eigen::Index n;
    if (!(in >> n) || n < 0) throw ParseError("model file: bad length for '" + key + "'");
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(in >> v[i])) throw ParseError("model file: truncated vector '" + key + "'");
    return v;
}

inline Eigen::MatrixXd read_matrix(std::istream& in, const std::string& key) {
    expect_key(in, key);
    Eigen::Index rows, cols;
    if (!(in >> rows >> cols) || rows < 0 || cols < 0)
        throw ParseError("model file: bad shape for '" + key + "'");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            if (!(in >> m(i, j))) throw ParseError("model file: truncated matrix '" + key + "'");
    return m;
}

}  // namespace detail

/// Writes the run configuration as key-value lines (fixed order, exact
/// decimals). Shared by the model file and the report header.
inline void write_pipeline_config(std::ostream& out, const PipelineConfig& c) {
    using detail::fmt;
    out << "seed " << c.seed << '\n';
    out << "svd_threshold " << fmt(c.svd_threshold) << '\n';
    out << "ci_level " << fmt(c.ci_level) << '\n';
    out << "rul_cap " << (c.rul_cap ? fmt(*c.rul_cap) : std::string("none")) << '\n';
    out << "lr " << fmt(c.mlp.lr) << '\n';
    out << "lambda " << fmt(c.mlp.lambda) << '\n';
    out << "alpha " << fmt(c.mlp.alpha) << '\n';
    out << "h1 " << c.mlp.h1 << '\n';
    out << "h2 " << c.mlp.h2 << '\n';
    out << "h3 " << c.mlp.h3 << '\n';
    out << "epochs " << c.mlp.epochs << '\n';
    out << "batch_size " << c.mlp.batch_size << '\n';
    out << "gp_restarts " << c.gp.restarts << '\n';
    out << "gp_max_iters " << c.gp.max_iters << '\n';
    out << "gp_step " << fmt(c.gp.step) << '\n';
    out << "gp_theta_lo " << fmt(c.gp.theta_lo) << '\n';
    out << "gp_theta_hi " << fmt(c.gp.theta_hi) << '\n';
    out << "gp_sigma2_lo " << fmt(c.gp.sigma2_lo) << '\n';
    out << "gp_sigma2_hi " << fmt(c.gp.sigma2_hi) << '\n';
    out << "gp_sigma02_lo " << fmt(c.gp.sigma02_lo) << '\n';
    out << "gp_sigma02_hi " << fmt(c.gp.sigma02_hi) << '\n';
    out << "gp_noise_lo " << fmt(c.gp.noise_lo) << '\n';
    out << "gp_noise_hi " << fmt(c.gp.noise_hi) << '\n';
    out << "gp_horizon " << c.gp_horizon << '\n';
}

inline PipelineConfig read_pipeline_config(std::istream& in) {
    using namespace detail;
    PipelineConfig c;
    c.seed = static_cast<std::uint64_t>(read_long(in, "seed"));
    c.svd_threshold = read_double(in, "svd_threshold");
    c.ci_level = read_double(in, "ci_level");
    {
        expect_key(in, "rul_cap");
        std::string tok;
        in >> tok;
        if (tok == "none") c.rul_cap.reset();
        else c.rul_cap = std::strtod(tok.c_str(), nullptr);
    }
    c.mlp.lr = read_double(in, "lr");
    c.mlp.lambda = read_double(in, "lambda");
    c.mlp.alpha = read_double(in, "alpha");
    c.mlp.h1 = static_cast<int>(read_long(in, "h1"));
    c.mlp.h2 = static_cast<int>(read_long(in, "h2"));
    c.mlp.h3 = static_cast<int>(read_long(in, "h3"));
    c.mlp.epochs = static_cast<int>(read_long(in, "epochs"));
    c.mlp.batch_size = static_cast<int>(read_long(in, "batch_size"));
    c.mlp.seed = c.seed;
    c.gp.restarts = static_cast<int>(read_long(in, "gp_restarts"));
    c.gp.max_iters = static_cast<int>(read_long(in, "gp_max_iters"));
    c.gp.step = read_double(in, "gp_step");
    c.gp.theta_lo = read_double(in, "gp_theta_lo");
    c.gp.theta_hi = read_double(in, "gp_theta_hi");
    c.gp.sigma2_lo = read_double(in, "gp_sigma2_lo");
    c.gp.sigma2_hi = read_double(in, "gp_sigma2_hi");
    c.gp.sigma02_lo = read_double(in, "gp_sigma02_lo");
    c.gp.sigma02_hi = read_double(in, "gp_sigma02_hi");
    c.gp.noise_lo = read_double(in, "gp_noise_lo");
    c.gp.noise_hi = read_double(in, "gp_noise_hi");
    c.gp_horizon = static_cast<int>(read_long(in, "gp_horizon"));
    return c;
}

constexpr const char* kModelFormatTag = "rulgp-model";
constexpr const char* kModelFormatVersion = "v1";

inline void save_pipeline(std::ostream& out, const TrainedPipeline& p) {
    using detail::fmt;
    using detail::write_matrix;
    using detail::write_vector;

    out << kModelFormatTag << ' ' << kModelFormatVersion << '\n';
    write_pipeline_config(out, p.config);
    write_vector(out, "norm_mean", p.stats.mean);
    write_vector(out, "norm_std", p.stats.std);
    out << "time_mean " << fmt(p.time.mean) << '\n';
    out << "time_std " << fmt(p.time.std) << '\n';
    out << "svd_rank " << p.basis.rank << '\n';
    write_vector(out, "svd_column_means", p.basis.column_means);
    write_vector(out, "svd_singular_values", p.basis.singular_values);
    write_matrix(out, "svd_right_basis", p.basis.right_basis);
    out << "mlp_alpha " << fmt(p.mlp.alpha) << '\n';
    out << "mlp_target_mean " << fmt(p.mlp.target_mean) << '\n';
    out << "mlp_target_scale " << fmt(p.mlp.target_scale) << '\n';
    out << "mlp_layers " << p.mlp.weights.size() << '\n';
    for (std::size_t l = 0; l < p.mlp.weights.size(); ++l) {
        write_matrix(out, "weights", p.mlp.weights[l]);
        write_vector(out, "biases", p.mlp.biases[l]);
    }
    out << "train_residual_std " << fmt(p.train_residual_std) << '\n';
    out << "end\n";
}

inline TrainedPipeline load_pipeline(std::istream& in) {
    using namespace detail;
    {
        std::string tag, version;
        if (!(in >> tag >> version) || tag != kModelFormatTag)
            throw ParseError("not a model file (missing format tag)");
        if (version != kModelFormatVersion)
            throw ParseError("unsupported model format version '" + version + "'");
    }
    TrainedPipeline p;
    p.config = read_pipeline_config(in);
    p.stats.mean = read_vector(in, "norm_mean");
    p.stats.std = read_vector(in, "norm_std");
    p.time.mean = read_double(in, "time_mean");
    p.time.std = read_double(in, "time_std");
    p.basis.rank = static_cast<int>(read_long(in, "svd_rank"));
    p.basis.column_means = read_vector(in, "svd_column_means");
    p.basis.singular_values = read_vector(in, "svd_singular_values");
    p.basis.right_basis = read_matrix(in, "svd_right_basis");
    if (p.basis.right_basis.cols() != p.basis.rank)
        throw ParseError("model file: basis shape disagrees with rank");
    p.mlp.alpha = read_double(in, "mlp_alpha");
    p.mlp.target_mean = read_double(in, "mlp_target_mean");
    p.mlp.target_scale = read_double(in, "mlp_target_scale");
    const long layers = read_long(in, "mlp_layers");
    for (long l = 0; l < layers; ++l) {
        p.mlp.weights.push_back(read_matrix(in, "weights"));
        p.mlp.biases.push_back(read_vector(in, "biases"));
    }
    p.train_residual_std = read_double(in, "train_residual_std");
    expect_key(in, "end");

    if (p.mlp.input_dim() != p.basis.rank + 1)
        throw ParseError("model file: network input dimension disagrees with basis rank");
    if (p.stats.mean.size() != p.basis.input_dim())
        throw ParseError("model file: normalization and basis dimensions disagree");
    return p;
}

inline void save_pipeline_file(const std::string& path, const TrainedPipeline& p) {
    const std::filesystem::path fp(path);
    if (fp.has_parent_path()) std::filesystem::create_directories(fp.parent_path());
    std::ofstream out(path, std::ios::binary);  // binary: no newline translation
    if (!out) throw InputError("cannot write model file: " + path);
    save_pipeline(out, p);
    if (!out) throw InputError("failed writing model file: " + path);
}

inline TrainedPipeline load_pipeline_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open model file: " + path);
    return load_pipeline(in);
}

}  // namespace rulgp
