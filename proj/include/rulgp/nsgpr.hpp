#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "rulgp/common.hpp"

namespace rulgp {

/// Covariance hyperparameters of the smoother. `theta` holds one inverse
/// squared lengthscale per input dimension.
struct KernelParams {
    double sigma2 = 1.0;     // squared-exponential amplitude
    Eigen::VectorXd theta;   // per-dimension SE decay rates, > 0
    double sigma0_2 = 1.0;   // dot-product offset, >= 0
    double noise = 0.1;      // observation noise standard deviation, >= 0

    void validate(Eigen::Index dims) const {
        if (!(sigma2 > 0) || !std::isfinite(sigma2))
            throw InputError("kernel params: sigma2 must be positive");
        if (theta.size() != dims) throw InputError("kernel params: theta dimension mismatch");
        for (Eigen::Index k = 0; k < theta.size(); ++k)
            if (!(theta[k] > 0) || !std::isfinite(theta[k]))
                throw InputError("kernel params: theta must be positive");
        if (!(sigma0_2 >= 0) || !std::isfinite(sigma0_2))
            throw InputError("kernel params: sigma0_2 must be non-negative");
        if (!(noise >= 0) || !std::isfinite(noise))
            throw InputError("kernel params: noise must be non-negative");
    }
};

/// Which covariance the model uses: the full nonstationary sum, or the
/// squared-exponential part alone (the stationary ablation).
enum class KernelKind { combined, se_only };

/// Whether the deterministic mean is the quadratic trend or zero.
enum class TrendKind { quadratic, none };

/// Stationary part: sigma^2 exp(-sum_k theta_k (x_ik - x_jk)^2).
inline double kernel_se(const Eigen::VectorXd& xi, const Eigen::VectorXd& xj,
                        const KernelParams& params) {
    if (xi.size() != xj.size()) throw InputError("kernel_se: dimension mismatch");
    const double q = (xi - xj).array().square().matrix().dot(params.theta);
    return params.sigma2 * std::exp(-q);
}

/// Nonstationary part: sigma0^2 + <xi, xj>. Depends on absolute positions,
/// not separations.
inline double kernel_dot(const Eigen::VectorXd& xi, const Eigen::VectorXd& xj,
                         const KernelParams& params) {
    if (xi.size() != xj.size()) throw InputError("kernel_dot: dimension mismatch");
    return params.sigma0_2 + xi.dot(xj);
}

inline double kernel_combined(const Eigen::VectorXd& xi, const Eigen::VectorXd& xj,
                              const KernelParams& params) {
    return kernel_se(xi, xj, params) + kernel_dot(xi, xj, params);
}

inline double kernel_value(const Eigen::VectorXd& xi, const Eigen::VectorXd& xj,
                           const KernelParams& params, KernelKind kind) {
    return kind == KernelKind::combined ? kernel_combined(xi, xj, params)
                                        : kernel_se(xi, xj, params);
}

/// Gram matrix over the rows of X, filled symmetrically.
inline Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& X, const KernelParams& params,
                                   KernelKind kind) {
    const Eigen::Index m = X.rows();
    Eigen::MatrixXd K(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = kernel_value(X.row(i).transpose(), X.row(j).transpose(), params, kind);
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return K;
}

inline Eigen::VectorXd cross_covariance(const Eigen::MatrixXd& X, const Eigen::VectorXd& x_new,
                                        const KernelParams& params, KernelKind kind) {
    Eigen::VectorXd k(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        k[i] = kernel_value(X.row(i).transpose(), x_new, params, kind);
    return k;
}

/// Quadratic trend features H(x) = [1, x, x^2], dimension 2d+1.
inline Eigen::VectorXd trend_row(const Eigen::VectorXd& x) {
    Eigen::VectorXd h(2 * x.size() + 1);
    h[0] = 1.0;
    h.segment(1, x.size()) = x;
    h.tail(x.size()) = x.array().square();
    return h;
}

inline Eigen::MatrixXd trend_matrix(const Eigen::MatrixXd& X) {
    Eigen::MatrixXd H(X.rows(), 2 * X.cols() + 1);
    for (Eigen::Index i = 0; i < X.rows(); ++i) H.row(i) = trend_row(X.row(i).transpose());
    return H;
}

/// Fitted smoother state: kernel hyperparameters, generalized-least-squares
/// trend coefficients, and the cached Cholesky factorization of
/// K + noise^2 I (+ jitter when the factorization needed it).
struct GprModel {
    Eigen::MatrixXd train_inputs;  // m x d
    Eigen::VectorXd train_targets;
    KernelParams params;
    KernelKind kind = KernelKind::combined;
    TrendKind trend = TrendKind::quadratic;
    Eigen::VectorXd beta;          // 2d+1 (zero-length when trend is none)
    Eigen::LLT<Eigen::MatrixXd> chol;
    Eigen::VectorXd resid_solve;   // (K + noise^2 I)^-1 (y - H beta)
    double jitter = 0.0;
    bool fitted = false;
};

/// Search configuration for the marginal-likelihood fit.
struct GprFitConfig {
    int restarts = 5;
    int max_iters = 150;
    double step = 0.08;  // Adam rate in log-parameter space
    KernelKind kind = KernelKind::combined;
    TrendKind trend = TrendKind::quadratic;
    std::uint64_t seed = 0;
    // log-uniform restart draw ranges
    double theta_lo = 1e-3, theta_hi = 1e2;
    double sigma2_lo = 1e-2, sigma2_hi = 1e4;
    double sigma02_lo = 1e-6, sigma02_hi = 1e2;
    double noise_lo = 1e-3, noise_hi = 1e2;
};

/// Diagnostics of one marginal-likelihood fit.
struct GprFitInfo {
    std::vector<double> restart_initial_lml;
    double best_lml = -std::numeric_limits<double>::infinity();
};

namespace detail {

/// Factorizes A = K + noise^2 I, adding jitter only if the plain
/// factorization fails: 1e-8 * trace(K)/m on the diagonal, escalating by 10x
/// up to 1e-2 * trace(K)/m before giving up.
inline std::pair<Eigen::LLT<Eigen::MatrixXd>, double> factorize_with_jitter(
    const Eigen::MatrixXd& K, double noise) {
    const Eigen::Index m = K.rows();
    const double scale = K.trace() / static_cast<double>(m);
    Eigen::MatrixXd A = K;
    A.diagonal().array() += noise * noise;

    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success) return {llt, 0.0};

    for (double factor = 1e-8; factor <= 1e-2 + 1e-15; factor *= 10.0) {
        const double jitter = factor * scale;
        Eigen::MatrixXd Aj = A;
        Aj.diagonal().array() += jitter;
        llt.compute(Aj);
        if (llt.info() == Eigen::Success) return {llt, jitter};
    }
    throw NumericError("gram matrix is not positive definite after jitter escalation");
}

/// Generalized least squares trend coefficients
/// beta = (H' A^-1 H)^-1 H' A^-1 y given the factorization of A.
inline Eigen::VectorXd gls_beta(const Eigen::LLT<Eigen::MatrixXd>& chol, const Eigen::MatrixXd& H,
                                const Eigen::VectorXd& y) {
    const Eigen::MatrixXd AinvH = chol.solve(H);
    const Eigen::MatrixXd M = H.transpose() * AinvH;
    const Eigen::VectorXd rhs = AinvH.transpose() * y;
    const Eigen::VectorXd beta = M.ldlt().solve(rhs);
    if (!beta.allFinite()) throw NumericError("trend coefficients are not finite");
    return beta;
}

}  // namespace detail

/// Conditions a model on data with the given hyperparameters (no search).
/// The trend is solved by generalized least squares.
inline GprModel gp_condition(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const KernelParams& params, KernelKind kind = KernelKind::combined,
                             TrendKind trend = TrendKind::quadratic) {
    const Eigen::Index m = X.rows();
    const Eigen::Index d = X.cols();
    if (y.size() != m) throw InputError("gp_condition: input/target count mismatch");
    if (trend == TrendKind::quadratic && m < 2 * d + 1)
        throw InputError("gp_condition: need at least " + std::to_string(2 * d + 1) +
                         " points for the quadratic trend");
    if (m < 1) throw InputError("gp_condition: empty training set");
    params.validate(d);

    GprModel model;
    model.train_inputs = X;
    model.train_targets = y;
    model.params = params;
    model.kind = kind;
    model.trend = trend;

    const Eigen::MatrixXd K = gram_matrix(X, params, kind);
    std::tie(model.chol, model.jitter) = detail::factorize_with_jitter(K, params.noise);

    Eigen::VectorXd resid = y;
    if (trend == TrendKind::quadratic) {
        const Eigen::MatrixXd H = trend_matrix(X);
        model.beta = detail::gls_beta(model.chol, H, y);
        resid -= H * model.beta;
    }
    model.resid_solve = model.chol.solve(resid);
    if (!model.resid_solve.allFinite()) throw NumericError("gp_condition: solve produced non-finite values");
    model.fitted = true;
    return model;
}

/// Posterior at a query point: mean through the trend plus the data
/// correction, variance as prior minus correction, clamped at zero.
inline std::pair<double, double> gp_posterior(const GprModel& model,
                                              const Eigen::VectorXd& x_new) {
    if (!model.fitted) throw StateError("gp_posterior: model is not fitted");
    if (x_new.size() != model.train_inputs.cols())
        throw InputError("gp_posterior: query dimension mismatch");

    const Eigen::VectorXd k_star =
        cross_covariance(model.train_inputs, x_new, model.params, model.kind);
    const double k_ss = kernel_value(x_new, x_new, model.params, model.kind);

    double mu = k_star.dot(model.resid_solve);
    if (model.trend == TrendKind::quadratic) mu += trend_row(x_new).dot(model.beta);

    const Eigen::VectorXd v = model.chol.solve(k_star);
    const double var = std::max(0.0, k_ss - k_star.dot(v));
    return {mu, var};
}

namespace detail {

/// Log marginal likelihood of the trend residuals plus its gradient in
/// log-parameter space. The trend is profiled out by GLS, so the gradient at
/// the GLS optimum needs no beta term. Layout of u: [log sigma2,
/// log theta_1..d, (log sigma0_2 when combined), log noise].
struct LmlEval {
    double value = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd grad;
};

inline KernelParams params_from_log(const Eigen::VectorXd& u, Eigen::Index d, KernelKind kind) {
    KernelParams p;
    p.sigma2 = std::exp(u[0]);
    p.theta = u.segment(1, d).array().exp();
    Eigen::Index next = 1 + d;
    if (kind == KernelKind::combined) p.sigma0_2 = std::exp(u[next++]);
    else p.sigma0_2 = 0.0;
    p.noise = std::exp(u[next]);
    return p;
}

inline Eigen::VectorXd log_from_params(const KernelParams& p, KernelKind kind) {
    const Eigen::Index d = p.theta.size();
    Eigen::VectorXd u(kind == KernelKind::combined ? d + 3 : d + 2);
    u[0] = std::log(p.sigma2);
    u.segment(1, d) = p.theta.array().log();
    Eigen::Index next = 1 + d;
    if (kind == KernelKind::combined) u[next++] = std::log(std::max(p.sigma0_2, 1e-300));
    u[next] = std::log(p.noise);
    return u;
}

inline LmlEval lml_and_grad(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const Eigen::VectorXd& u, KernelKind kind, TrendKind trend) {
    const Eigen::Index m = X.rows();
    const Eigen::Index d = X.cols();
    const KernelParams params = params_from_log(u, d, kind);

    // SE block kept separately for its gradient
    KernelParams se_only = params;
    se_only.sigma0_2 = 0.0;
    const Eigen::MatrixXd K_se = gram_matrix(X, se_only, KernelKind::se_only);
    Eigen::MatrixXd K = K_se;
    if (kind == KernelKind::combined)
        K += Eigen::MatrixXd::Constant(m, m, params.sigma0_2) + X * X.transpose();

    auto [chol, jitter] = factorize_with_jitter(K, params.noise);

    Eigen::VectorXd resid = y;
    if (trend == TrendKind::quadratic) {
        const Eigen::MatrixXd H = trend_matrix(X);
        resid -= H * gls_beta(chol, H, y);
    }
    const Eigen::VectorXd alpha = chol.solve(resid);

    double log_det = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) log_det += 2.0 * std::log(chol.matrixLLT()(i, i));

    LmlEval out;
    out.value = -0.5 * resid.dot(alpha) - 0.5 * log_det -
                0.5 * static_cast<double>(m) * std::log(2.0 * 3.141592653589793238);
    if (!std::isfinite(out.value)) {
        out.value = -std::numeric_limits<double>::infinity();
        return out;
    }

    const Eigen::MatrixXd A_inv = chol.solve(Eigen::MatrixXd::Identity(m, m));
    // dL/dp = 0.5 (alpha' dA alpha - tr(A^-1 dA)) for each log-parameter.
    // Jitter, when active, scales with trace(K)/m whose sigma2/sigma0_2
    // derivatives are included below.
    const double jitter_factor = jitter > 0.0 ? jitter / (K.trace() / static_cast<double>(m)) : 0.0;

    out.grad.resize(u.size());
    auto direction = [&](const Eigen::MatrixXd& dA) {
        return 0.5 * (alpha.dot(dA * alpha) - (A_inv.cwiseProduct(dA)).sum());
    };
    auto diag_direction = [&](double scale) {
        // dA = scale * I
        return 0.5 * scale * (alpha.squaredNorm() - A_inv.trace());
    };

    Eigen::Index idx = 0;
    out.grad[idx++] = direction(K_se) + diag_direction(jitter_factor * params.sigma2);
    for (Eigen::Index k = 0; k < d; ++k) {
        const Eigen::VectorXd col = X.col(k);
        Eigen::MatrixXd D(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j) {
                const double diff = col[i] - col[j];
                D(i, j) = diff * diff;
            }
        out.grad[idx++] = direction((-params.theta[k]) * K_se.cwiseProduct(D));
    }
    if (kind == KernelKind::combined) {
        const double s02 = params.sigma0_2;
        out.grad[idx++] = 0.5 * s02 * (alpha.sum() * alpha.sum() - A_inv.sum()) +
                          diag_direction(jitter_factor * s02);
    }
    out.grad[idx] = diag_direction(2.0 * params.noise * params.noise);
    return out;
}

}  // namespace detail

/// Fits hyperparameters by maximizing the log marginal likelihood of the
/// trend residuals: Adam ascent in log-parameter space from `restarts`
/// log-uniform starting points, returning the best point ever evaluated.
inline GprModel gp_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const GprFitConfig& config, GprFitInfo* info = nullptr) {
    const Eigen::Index m = X.rows();
    const Eigen::Index d = X.cols();
    if (m < 2 * d + 1)
        throw InputError("gp_fit: need at least " + std::to_string(2 * d + 1) +
                         " points (quadratic trend)");
    if (y.size() != m) throw InputError("gp_fit: input/target count mismatch");
    if (!X.allFinite() || !y.allFinite()) throw InputError("gp_fit: non-finite inputs");

    GprFitInfo local;
    Eigen::VectorXd best_u;
    constexpr double kLogLo = -25.0, kLogHi = 16.0;

    for (int restart = 0; restart < config.restarts; ++restart) {
        Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(restart)));
        KernelParams start;
        start.sigma2 = rng.log_uniform(config.sigma2_lo, config.sigma2_hi);
        start.theta.resize(d);
        for (Eigen::Index k = 0; k < d; ++k)
            start.theta[k] = rng.log_uniform(config.theta_lo, config.theta_hi);
        start.sigma0_2 = config.kind == KernelKind::combined
                             ? rng.log_uniform(config.sigma02_lo, config.sigma02_hi)
                             : 0.0;
        start.noise = rng.log_uniform(config.noise_lo, config.noise_hi);

        Eigen::VectorXd u = detail::log_from_params(start, config.kind);
        Eigen::VectorXd adam_m = Eigen::VectorXd::Zero(u.size());
        Eigen::VectorXd adam_v = Eigen::VectorXd::Zero(u.size());

        bool first_eval = true;
        for (int iter = 0; iter < config.max_iters; ++iter) {
            detail::LmlEval eval;
            try {
                eval = detail::lml_and_grad(X, y, u, config.kind, config.trend);
            } catch (const NumericError&) {
                break;  // hopeless corner of parameter space; keep best so far
            }
            if (!std::isfinite(eval.value)) break;
            if (first_eval) {
                local.restart_initial_lml.push_back(eval.value);
                first_eval = false;
            }
            if (eval.value > local.best_lml) {
                local.best_lml = eval.value;
                best_u = u;
            }
            if (eval.grad.cwiseAbs().maxCoeff() < 1e-3) break;

            const int t = iter + 1;
            adam_m = 0.9 * adam_m + 0.1 * eval.grad;
            adam_v = 0.999 * adam_v + 0.001 * eval.grad.cwiseProduct(eval.grad);
            const Eigen::VectorXd m_hat = adam_m / (1.0 - std::pow(0.9, t));
            const Eigen::VectorXd v_hat = adam_v / (1.0 - std::pow(0.999, t));
            u += config.step * (m_hat.array() / (v_hat.array().sqrt() + 1e-8)).matrix();
            u = u.cwiseMax(kLogLo).cwiseMin(kLogHi);
        }
        if (first_eval) local.restart_initial_lml.push_back(-std::numeric_limits<double>::infinity());
    }

    if (!std::isfinite(local.best_lml))
        throw NumericError("gp_fit: no hyperparameter point had a finite marginal likelihood");

    if (info) *info = local;
    const KernelParams best = detail::params_from_log(best_u, d, config.kind);
    return gp_condition(X, y, best, config.kind, config.trend);
}

}  // namespace rulgp
