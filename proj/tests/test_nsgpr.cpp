#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "rulgp/nsgpr.hpp"

using namespace rulgp;

namespace {

Eigen::VectorXd vec1(double x) {
    Eigen::VectorXd v(1);
    v << x;
    return v;
}

KernelParams make_params(double sigma2, double theta, double sigma0_2, double noise) {
    KernelParams p;
    p.sigma2 = sigma2;
    p.theta = vec1(theta);
    p.sigma0_2 = sigma0_2;
    p.noise = noise;
    return p;
}

/// Random 1-D regression problem on [0, 1].
std::pair<Eigen::MatrixXd, Eigen::VectorXd> random_problem(Eigen::Index m, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd X(m, 1);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        X(i, 0) = rng.uniform();
        y[i] = std::sin(6.0 * X(i, 0)) + 0.3 * rng.normal();
    }
    return {X, y};
}

}  // namespace

TEST_CASE("squared exponential kernel", "[nsgpr]") {
    const auto p = make_params(2.5, 1.0, 0.0, 0.0);
    SECTION("value at zero separation is sigma2") {
        CHECK(kernel_se(vec1(0.7), vec1(0.7), p) == 2.5);
    }
    SECTION("unit separation with unit parameters gives 1/e") {
        const auto unit = make_params(1.0, 1.0, 0.0, 0.0);
        CHECK(kernel_se(vec1(0.0), vec1(1.0), unit) == Catch::Approx(std::exp(-1.0)));
    }
    SECTION("decays monotonically to zero with distance") {
        double prev = kernel_se(vec1(0.0), vec1(0.0), p);
        for (double dist = 0.5; dist <= 20.0; dist += 0.5) {
            const double v = kernel_se(vec1(0.0), vec1(dist), p);
            REQUIRE(v < prev);
            prev = v;
        }
        CHECK(prev <= 1e-12);
    }
}

TEST_CASE("dot product kernel is nonstationary", "[nsgpr]") {
    SECTION("zero vectors give sigma0_2") {
        const auto p = make_params(1.0, 1.0, 3.7, 0.0);
        Eigen::VectorXd z = Eigen::VectorXd::Zero(2);
        CHECK(kernel_dot(z, z, p) == 3.7);
    }
    SECTION("plain inner product when the offset is zero") {
        const auto p = make_params(1.0, 1.0, 0.0, 0.0);
        Eigen::VectorXd a(2), b(2);
        a << 1, 2;
        b << 3, 4;
        CHECK(kernel_dot(a, b, p) == 11.0);
    }
    SECTION("translation changes the value") {
        const auto p = make_params(1.0, 1.0, 0.5, 0.0);
        const double before = kernel_dot(vec1(0.2), vec1(0.9), p);
        const double after = kernel_dot(vec1(0.2 + 2.0), vec1(0.9 + 2.0), p);
        CHECK(before != after);
    }
}

TEST_CASE("combined kernel is the pointwise sum with a PSD Gram", "[nsgpr]") {
    const auto p = make_params(1.3, 2.0, 0.4, 0.0);
    Rng rng(5);
    SECTION("sum and self-value") {
        for (int i = 0; i < 10; ++i) {
            const Eigen::VectorXd a = vec1(rng.uniform(-2, 2));
            const Eigen::VectorXd b = vec1(rng.uniform(-2, 2));
            CHECK(kernel_combined(a, b, p) ==
                  Catch::Approx(kernel_se(a, b, p) + kernel_dot(a, b, p)).margin(1e-15));
        }
        const Eigen::VectorXd x = vec1(1.7);
        CHECK(kernel_combined(x, x, p) == Catch::Approx(1.3 + 0.4 + 1.7 * 1.7));
    }
    SECTION("random 10-point Gram has min eigenvalue >= -1e-10") {
        Eigen::MatrixXd X(10, 1);
        for (int i = 0; i < 10; ++i) X(i, 0) = rng.uniform(-3, 3);
        const Eigen::MatrixXd K = gram_matrix(X, p, KernelKind::combined);
        CHECK((K - K.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(oracle::min_eigenvalue(K) >= -1e-10);
    }
}

TEST_CASE("Gram matrices are symmetric and PSD on random point sets", "[nsgpr][property]") {
    Rng rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        const int m = rng.uniform_int(2, 12);
        const int d = rng.uniform_int(1, 3);
        Eigen::MatrixXd X(m, d);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < d; ++j) X(i, j) = rng.uniform(-4, 4);
        KernelParams p;
        p.sigma2 = rng.log_uniform(0.1, 10);
        p.theta = Eigen::VectorXd::Constant(d, rng.log_uniform(0.05, 5));
        p.sigma0_2 = rng.uniform(0.0, 2.0);
        p.noise = 0.0;
        const Eigen::MatrixXd K = gram_matrix(X, p, KernelKind::combined);
        REQUIRE((K - K.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        REQUIRE(oracle::min_eigenvalue(K) >= -1e-10);
    }
}

TEST_CASE("posterior matches the explicit-inverse oracle", "[nsgpr][oracle]") {
    const auto [X, y] = random_problem(8, 23);
    const auto p = make_params(1.2, 3.0, 0.6, 0.15);
    const GprModel model = gp_condition(X, y, p);

    // oracle recomputes beta and the posterior by dense inversion
    Eigen::MatrixXd A = gram_matrix(X, p, KernelKind::combined);
    A.diagonal().array() += p.noise * p.noise;
    const Eigen::MatrixXd A_inv = A.inverse();
    const Eigen::MatrixXd H = trend_matrix(X);
    const Eigen::MatrixXd M = H.transpose() * A_inv * H;
    const Eigen::VectorXd beta = M.inverse() * (H.transpose() * (A_inv * y));

    Rng rng(29);
    for (int q = 0; q < 12; ++q) {
        const Eigen::VectorXd x_new = vec1(rng.uniform(-0.5, 1.5));
        const auto [mu, var] = gp_posterior(model, x_new);

        const Eigen::VectorXd k_star = cross_covariance(X, x_new, p, KernelKind::combined);
        const double mu_oracle = trend_row(x_new).dot(beta) + k_star.dot(A_inv * (y - H * beta));
        const double var_oracle =
            kernel_combined(x_new, x_new, p) - k_star.dot(A_inv * k_star);

        REQUIRE(std::abs(mu - mu_oracle) < 1e-8);
        REQUIRE(std::abs(var - std::max(0.0, var_oracle)) < 1e-8);
    }
}

TEST_CASE("noiseless posterior interpolates the training targets", "[nsgpr]") {
    const Eigen::Index m = 9;
    Eigen::MatrixXd X(m, 1);
    Eigen::VectorXd y(m);
    Rng rng(41);
    for (Eigen::Index i = 0; i < m; ++i) {
        X(i, 0) = static_cast<double>(i) / (m - 1);
        y[i] = rng.uniform(-1, 1);
    }
    // scales kept small so any fallback jitter stays below the tolerance
    const auto p = make_params(0.4, 4.0, 0.1, 0.0);
    const GprModel model = gp_condition(X, y, p);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto [mu, var] = gp_posterior(model, X.row(i).transpose());
        REQUIRE(std::abs(mu - y[i]) <= 1e-8);
        REQUIRE(var <= 1e-8);
    }
}

TEST_CASE("far from the data the SE contribution to variance vanishes", "[nsgpr]") {
    const auto [X, y] = random_problem(10, 31);
    const auto p = make_params(1.5, 2.0, 0.3, 0.1);
    const GprModel model = gp_condition(X, y, p);

    const Eigen::VectorXd far = vec1(30.0);  // >= 28 lengthscale-equivalents away
    const auto [mu, var] = gp_posterior(model, far);
    (void)mu;

    // dot-product-only correction: the SE cross-covariances are ~exp(-1600)
    KernelParams dot_only = p;
    Eigen::MatrixXd A = gram_matrix(X, p, KernelKind::combined);
    A.diagonal().array() += p.noise * p.noise;
    Eigen::VectorXd k_dot(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        k_dot[i] = kernel_dot(X.row(i).transpose(), far, p);
    const double expected = kernel_combined(far, far, p) - k_dot.dot(A.inverse() * k_dot);
    CHECK(var == Catch::Approx(expected).margin(1e-8 * std::abs(expected)));
}

TEST_CASE("marginal likelihood gradient matches finite differences", "[nsgpr][oracle]") {
    const auto [X, y] = random_problem(12, 53);
    Eigen::VectorXd u(4);
    u << std::log(0.8), std::log(2.5), std::log(0.3), std::log(0.2);

    const auto eval = detail::lml_and_grad(X, y, u, KernelKind::combined, TrendKind::quadratic);
    const double h = 1e-6;
    for (Eigen::Index k = 0; k < u.size(); ++k) {
        Eigen::VectorXd up = u, dn = u;
        up[k] += h;
        dn[k] -= h;
        const double fp =
            detail::lml_and_grad(X, y, up, KernelKind::combined, TrendKind::quadratic).value;
        const double fm =
            detail::lml_and_grad(X, y, dn, KernelKind::combined, TrendKind::quadratic).value;
        const double fd = (fp - fm) / (2 * h);
        REQUIRE(std::abs(eval.grad[k] - fd) <=
                1e-5 * std::max({1.0, std::abs(fd), std::abs(eval.grad[k])}));
    }
}

TEST_CASE("fit recovers the decay rate of a sampled GP within a factor of 2", "[nsgpr][slow]") {
    // sample y ~ GP(0, SE(theta*=4, sigma*^2=1)) + noise 0.01 on 200 points
    const Eigen::Index m = 200;
    Eigen::MatrixXd X(m, 1);
    for (Eigen::Index i = 0; i < m; ++i) X(i, 0) = 3.0 * static_cast<double>(i) / (m - 1);
    const auto truth = make_params(1.0, 4.0, 0.0, 0.0);
    Eigen::MatrixXd K = gram_matrix(X, truth, KernelKind::se_only);
    K.diagonal().array() += 1e-10;
    const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(K).matrixL();
    Rng rng(7);
    Eigen::VectorXd z(m);
    for (Eigen::Index i = 0; i < m; ++i) z[i] = rng.normal();
    Eigen::VectorXd y = L * z;
    for (Eigen::Index i = 0; i < m; ++i) y[i] += 0.01 * rng.normal();

    GprFitConfig config;
    config.seed = 11;
    const GprModel model = gp_fit(X, y, config);
    CHECK(model.params.theta[0] >= 2.0);
    CHECK(model.params.theta[0] <= 8.0);
}

TEST_CASE("fit reproduces linear and constant targets exactly", "[nsgpr]") {
    Eigen::MatrixXd X(10, 1);
    for (int i = 0; i < 10; ++i) X(i, 0) = 0.1 * (i + 1);
    GprFitConfig config;
    config.seed = 3;
    config.max_iters = 60;

    SECTION("y = x") {
        const Eigen::VectorXd y = X.col(0);
        const GprModel model = gp_fit(X, y, config);
        for (double q : {0.05, 0.37, 0.95, 1.4}) {
            const auto [mu, var] = gp_posterior(model, vec1(q));
            (void)var;
            REQUIRE(std::abs(mu - q) < 1e-6);
        }
    }
    SECTION("y = c") {
        const Eigen::VectorXd y = Eigen::VectorXd::Constant(10, 4.2);
        const GprModel model = gp_fit(X, y, config);
        for (double q : {0.0, 0.5, 1.3}) {
            const auto [mu, var] = gp_posterior(model, vec1(q));
            (void)var;
            REQUIRE(std::abs(mu - 4.2) < 1e-6);
        }
    }
}

TEST_CASE("fit rejects fewer than 3 points in one dimension", "[nsgpr]") {
    Eigen::MatrixXd X(2, 1);
    X << 0.1, 0.9;
    Eigen::VectorXd y(2);
    y << 1.0, 2.0;
    REQUIRE_THROWS_AS(gp_fit(X, y, GprFitConfig{}), InputError);
}

TEST_CASE("with dot kernel and trend zeroed the model is standard stationary GPR",
          "[nsgpr][oracle]") {
    const auto [X, y] = random_problem(12, 61);
    const auto p = make_params(0.9, 5.0, 0.0, 0.2);
    const GprModel model = gp_condition(X, y, p, KernelKind::se_only, TrendKind::none);

    Eigen::MatrixXd A = gram_matrix(X, p, KernelKind::se_only);
    A.diagonal().array() += p.noise * p.noise;
    const Eigen::MatrixXd A_inv = A.inverse();

    Rng rng(62);
    for (int q = 0; q < 10; ++q) {
        const Eigen::VectorXd x_new = vec1(rng.uniform(0, 1));
        const Eigen::VectorXd k_star = cross_covariance(X, x_new, p, KernelKind::se_only);
        const double mu_oracle = k_star.dot(A_inv * y);
        const double var_oracle = p.sigma2 - k_star.dot(A_inv * k_star);
        const auto [mu, var] = gp_posterior(model, x_new);
        REQUIRE(std::abs(mu - mu_oracle) < 1e-8);
        REQUIRE(std::abs(var - std::max(0.0, var_oracle)) < 1e-8);
    }
}

TEST_CASE("returned likelihood dominates every restart's initial point", "[nsgpr]") {
    const auto [X, y] = random_problem(20, 71);
    GprFitConfig config;
    config.seed = 5;
    config.max_iters = 40;
    GprFitInfo info;
    (void)gp_fit(X, y, config, &info);
    REQUIRE(info.restart_initial_lml.size() == 5);
    for (double initial : info.restart_initial_lml) REQUIRE(info.best_lml >= initial);
}

TEST_CASE("posterior variance is non-negative at 1000 random queries", "[nsgpr][property]") {
    const auto [X, y] = random_problem(15, 83);
    GprFitConfig config;
    config.seed = 9;
    config.max_iters = 50;
    const GprModel model = gp_fit(X, y, config);
    Rng rng(84);
    for (int q = 0; q < 1000; ++q) {
        const auto [mu, var] = gp_posterior(model, vec1(rng.uniform(-5.0, 5.0)));
        (void)mu;
        REQUIRE(var >= 0.0);
    }
}

TEST_CASE("observation noise never shrinks the posterior variance", "[nsgpr][property]") {
    const auto [X, y] = random_problem(12, 97);
    const auto clean = make_params(1.1, 3.0, 0.4, 0.0);
    auto noisy = clean;
    noisy.noise = 0.4;
    const GprModel a = gp_condition(X, y, clean);
    const GprModel b = gp_condition(X, y, noisy);
    Rng rng(98);
    for (int q = 0; q < 200; ++q) {
        const Eigen::VectorXd x_new = vec1(rng.uniform(-1.0, 2.0));
        const double var_clean = gp_posterior(a, x_new).second;
        const double var_noisy = gp_posterior(b, x_new).second;
        REQUIRE(var_noisy >= var_clean - 1e-12);
    }
}

TEST_CASE("posterior on an unfitted model is a state error", "[nsgpr]") {
    GprModel model;
    REQUIRE_THROWS_AS(gp_posterior(model, vec1(0.5)), StateError);
}
