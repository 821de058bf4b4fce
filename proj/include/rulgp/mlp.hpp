#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rulgp/cmapss.hpp"
#include "rulgp/common.hpp"
#include "rulgp/svd_features.hpp"

namespace rulgp {

/// Hyperparameter record [lr, lambda, alpha, H1, H2, H3] plus the training
/// schedule knobs the estimation method leaves open.
struct MlpHyperparams {
    double lr = 5e-4;      // Adam step size
    double lambda = 1e-3;  // L2 penalty on weight matrices
    double alpha = 0.2;    // leaky-ReLU negative slope
    int h1 = 50;
    int h2 = 100;
    int h3 = 50;
    int epochs = 150;
    int batch_size = 256;
    std::uint64_t seed = 42;

    void validate() const {
        if (!(lr > 0)) throw InputError("hyperparams: lr must be positive");
        if (!(lambda >= 0)) throw InputError("hyperparams: lambda must be non-negative");
        if (!(alpha >= 0 && alpha < 1)) throw InputError("hyperparams: alpha must be in [0, 1)");
        if (h1 < 1 || h2 < 1 || h3 < 1) throw InputError("hyperparams: hidden widths must be >= 1");
        if (epochs < 1 || batch_size < 1) throw InputError("hyperparams: bad training schedule");
    }
};

inline double leaky_relu(double x, double alpha) { return x >= 0.0 ? x : alpha * x; }

struct MlpGradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

/// Standardizes the appended time input (raw cycle number) by the
/// training-set cycle mean/std.
struct TimeScaler {
    double mean = 0.0;
    double std = 1.0;

    double scale(double cycle) const { return (cycle - mean) / std; }
};

/// Fully connected regressor: input -> H1 -> H2 -> H3 -> 1 with leaky-ReLU
/// after each hidden affine block and a linear output. The raw network output
/// is mapped through `target_mean + target_scale * z` so Adam trains O(1)
/// internals regardless of the label scale; loss and gradients are defined on
/// the untransformed prediction.
struct MlpModel {
    std::vector<Eigen::MatrixXd> weights;  // (out x in) per layer, 4 layers
    std::vector<Eigen::VectorXd> biases;
    double alpha = 0.2;
    double target_mean = 0.0;
    double target_scale = 1.0;

    // Adam optimizer state (training only, not serialized)
    std::vector<Eigen::MatrixXd> adam_m_w, adam_v_w;
    std::vector<Eigen::VectorXd> adam_m_b, adam_v_b;
    long adam_step_count = 0;

    Eigen::Index input_dim() const { return weights.empty() ? 0 : weights[0].cols(); }

    bool finite() const {
        for (const auto& w : weights)
            if (!w.allFinite()) return false;
        for (const auto& b : biases)
            if (!b.allFinite()) return false;
        return true;
    }
};

/// Fresh model with Kaiming-uniform weights (leaky-ReLU gain), zero biases,
/// zeroed Adam buffers. Deterministic in the seed.
inline MlpModel init_mlp(int input_dim, const MlpHyperparams& hyper) {
    hyper.validate();
    if (input_dim < 1) throw InputError("init_mlp: input dimension must be positive");

    MlpModel model;
    model.alpha = hyper.alpha;
    Rng rng(hyper.seed);
    const std::vector<int> dims = {input_dim, hyper.h1, hyper.h2, hyper.h3, 1};
    const double gain2 = 2.0 / (1.0 + hyper.alpha * hyper.alpha);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const double bound = std::sqrt(3.0 * gain2 / fan_in);
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int i = 0; i < fan_out; ++i)
            for (int j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-bound, bound);
        model.weights.push_back(w);
        model.biases.push_back(Eigen::VectorXd::Zero(fan_out));
        model.adam_m_w.push_back(Eigen::MatrixXd::Zero(fan_out, fan_in));
        model.adam_v_w.push_back(Eigen::MatrixXd::Zero(fan_out, fan_in));
        model.adam_m_b.push_back(Eigen::VectorXd::Zero(fan_out));
        model.adam_v_b.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    return model;
}

/// One prediction per row of `inputs` (rows x input_dim).
inline Eigen::VectorXd forward_batch(const MlpModel& model, const Eigen::MatrixXd& inputs) {
    if (inputs.cols() != model.input_dim())
        throw InputError("forward: input has " + std::to_string(inputs.cols()) +
                         " features, model expects " + std::to_string(model.input_dim()));
    Eigen::MatrixXd a = inputs;
    const std::size_t n_layers = model.weights.size();
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
        a = (a * model.weights[l].transpose()).rowwise() + model.biases[l].transpose();
        a = a.unaryExpr([&](double x) { return leaky_relu(x, model.alpha); });
    }
    Eigen::VectorXd z =
        (a * model.weights.back().transpose()).col(0).array() + model.biases.back()[0];
    return (z.array() * model.target_scale + model.target_mean).matrix();
}

inline double forward(const MlpModel& model, const Eigen::VectorXd& input) {
    return forward_batch(model, input.transpose())[0];
}

/// Mean squared error plus lambda * sum ||W||_F^2 (weights only), with
/// analytic gradients by backpropagation.
inline std::pair<double, MlpGradients> loss_and_grad(const MlpModel& model,
                                                     const Eigen::MatrixXd& inputs,
                                                     const Eigen::VectorXd& targets,
                                                     double lambda) {
    const Eigen::Index n = inputs.rows();
    if (n == 0) throw InputError("loss_and_grad: empty batch");
    if (targets.size() != n) throw InputError("loss_and_grad: batch/target size mismatch");
    if (inputs.cols() != model.input_dim()) throw InputError("loss_and_grad: dimension mismatch");

    const std::size_t n_layers = model.weights.size();
    std::vector<Eigen::MatrixXd> pre(n_layers);   // pre-activations
    std::vector<Eigen::MatrixXd> act(n_layers);   // activations fed to each layer
    Eigen::MatrixXd a = inputs;
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
        act[l] = a;
        pre[l] = (a * model.weights[l].transpose()).rowwise() + model.biases[l].transpose();
        a = pre[l].unaryExpr([&](double x) { return leaky_relu(x, model.alpha); });
    }
    act[n_layers - 1] = a;
    const Eigen::VectorXd z =
        (a * model.weights.back().transpose()).col(0).array() + model.biases.back()[0];
    const Eigen::VectorXd pred = (z.array() * model.target_scale + model.target_mean).matrix();

    const Eigen::VectorXd resid = pred - targets;
    double loss = resid.squaredNorm() / static_cast<double>(n);
    for (const auto& w : model.weights) loss += lambda * w.squaredNorm();
    if (!std::isfinite(loss))
        throw NumericError("loss_and_grad: non-finite loss (diverging hyperparameters)");

    MlpGradients grads;
    grads.weights.resize(n_layers);
    grads.biases.resize(n_layers);

    // d loss / d z, through the output transform
    Eigen::VectorXd dz = resid * (2.0 * model.target_scale / static_cast<double>(n));
    grads.weights[n_layers - 1] =
        dz.transpose() * act[n_layers - 1] + 2.0 * lambda * model.weights[n_layers - 1];
    grads.biases[n_layers - 1] = Eigen::VectorXd::Constant(1, dz.sum());

    Eigen::MatrixXd delta = dz * model.weights[n_layers - 1];  // n x h3
    for (std::size_t l = n_layers - 1; l-- > 0;) {
        delta = delta.cwiseProduct(
            pre[l].unaryExpr([&](double x) { return x >= 0.0 ? 1.0 : model.alpha; }));
        grads.weights[l] = delta.transpose() * act[l] + 2.0 * lambda * model.weights[l];
        grads.biases[l] = delta.colwise().sum().transpose();
        if (l > 0) delta = delta * model.weights[l];
    }
    return {loss, std::move(grads)};
}

namespace detail {
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

template <typename Param>
void adam_update(Param& param, Param& m, Param& v, const Param& grad, double lr, double bc1,
                 double bc2) {
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * grad.cwiseProduct(grad);
    param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kAdamEps);
}
}  // namespace detail

/// Standard Adam with beta1 = 0.9, beta2 = 0.999, eps = 1e-8 and bias
/// correction.
inline void adam_step_inplace(MlpModel& model, const MlpGradients& grads,
                              const MlpHyperparams& hyper) {
    model.adam_step_count += 1;
    const double bc1 = 1.0 - std::pow(detail::kAdamBeta1, model.adam_step_count);
    const double bc2 = 1.0 - std::pow(detail::kAdamBeta2, model.adam_step_count);
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        detail::adam_update(model.weights[l], model.adam_m_w[l], model.adam_v_w[l],
                            grads.weights[l], hyper.lr, bc1, bc2);
        detail::adam_update(model.biases[l], model.adam_m_b[l], model.adam_v_b[l],
                            grads.biases[l], hyper.lr, bc1, bc2);
    }
}

inline MlpModel adam_step(MlpModel model, const MlpGradients& grads,
                          const MlpHyperparams& hyper) {
    adam_step_inplace(model, grads, hyper);
    return model;
}

struct TrainInfo {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    long steps = 0;
};

/// Trains on (features, targets) with per-epoch shuffled minibatches under
/// the run seed. Deterministic: identical data, hyperparameters and seed give
/// bit-identical models.
inline MlpModel train(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                      const MlpHyperparams& hyper, TrainInfo* info = nullptr) {
    hyper.validate();
    const Eigen::Index n = features.rows();
    if (n == 0) throw InputError("train: empty training set");
    if (targets.size() != n) throw InputError("train: feature/target count mismatch");

    MlpModel model = init_mlp(static_cast<int>(features.cols()), hyper);
    model.target_mean = targets.mean();
    const double var = (targets.array() - model.target_mean).square().mean();
    model.target_scale = var > 0.0 ? std::sqrt(var) : 1.0;

    Rng rng(mix_seed(hyper.seed, 1));
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    const Eigen::Index bs = std::min<Eigen::Index>(hyper.batch_size, n);

    TrainInfo local;
    local.initial_loss = loss_and_grad(model, features, targets, hyper.lambda).first;

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        // Fisher-Yates under the run RNG
        for (Eigen::Index i = n - 1; i > 0; --i) {
            const Eigen::Index j = rng.uniform_int(0, static_cast<int>(i));
            std::swap(order[i], order[j]);
        }
        for (Eigen::Index start = 0; start < n; start += bs) {
            const Eigen::Index len = std::min(bs, n - start);
            Eigen::MatrixXd bx(len, features.cols());
            Eigen::VectorXd by(len);
            for (Eigen::Index i = 0; i < len; ++i) {
                bx.row(i) = features.row(order[start + i]);
                by[i] = targets[order[start + i]];
            }
            double loss;
            MlpGradients grads;
            try {
                std::tie(loss, grads) = loss_and_grad(model, bx, by, hyper.lambda);
            } catch (const NumericError&) {
                throw NumericError("train: diverged at epoch " + std::to_string(epoch) +
                                   " (non-finite loss)");
            }
            adam_step_inplace(model, grads, hyper);
            if (!model.finite())
                throw NumericError("train: diverged at epoch " + std::to_string(epoch) +
                                   " (non-finite parameters)");
            ++local.steps;
        }
    }
    local.final_loss = loss_and_grad(model, features, targets, hyper.lambda).first;
    if (info) *info = local;
    return model;
}

/// Builds the model input for one sensor row: normalized features projected
/// onto the SVD basis, with the standardized cycle number appended.
inline Eigen::VectorXd assemble_input(const SensorRow& row, const SvdBasis& basis,
                                      const NormStats& stats, const TimeScaler& time) {
    const Eigen::VectorXd projected = project_row(apply_norm_row(row.features, stats), basis);
    Eigen::VectorXd input(projected.size() + 1);
    input.head(projected.size()) = projected;
    input[projected.size()] = time.scale(row.cycle);
    return input;
}

/// Per-cycle RUL estimates for one engine, ordered by cycle: the RUL_t
/// trajectory the smoother consumes. Values are the raw network outputs
/// (unclamped).
inline std::vector<std::pair<int, double>> predict_trajectory(const MlpModel& model,
                                                              const EngineTrajectory& engine,
                                                              const SvdBasis& basis,
                                                              const NormStats& stats,
                                                              const TimeScaler& time) {
    if (engine.rows.empty()) throw InputError("predict_trajectory: empty trajectory");
    std::vector<std::pair<int, double>> out;
    out.reserve(engine.rows.size());
    for (const auto& row : engine.rows)
        out.emplace_back(row.cycle, forward(model, assemble_input(row, basis, stats, time)));
    return out;
}

}  // namespace rulgp
