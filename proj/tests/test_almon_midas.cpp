#include <doctest.h>

#include <cmath>

#include "mfcast/almon.hpp"
#include "mfcast/midas.hpp"
#include "mfcast/rng.hpp"

using namespace mfcast;

namespace {

// Design with one block per covariate over iid normal draws.
AlignedDesign random_design(int n, const std::vector<int>& widths, Rng& rng) {
    AlignedDesign ad;
    int p = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
        ad.blocks.push_back({"x" + std::to_string(k + 1), p, widths[k], 0, 3, 0, false});
        for (int j = 0; j < widths[k]; ++j)
            ad.columns.push_back({"x" + std::to_string(k + 1), j, false});
        p += widths[k];
    }
    ad.X.resize(n, p);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < p; ++c) ad.X(r, c) = rng.normal();
    ad.y = Eigen::VectorXd::Zero(n);
    ad.valid.assign(n, 1);
    ad.period.resize(n);
    for (int r = 0; r < n; ++r) ad.period[r] = r + 1;
    return ad;
}

void plant_midas_response(AlignedDesign& ad, double alpha, const std::vector<double>& beta,
                          const std::vector<AlmonTheta>& theta, double noise_sd, Rng& rng) {
    for (int r = 0; r < ad.rows(); ++r) {
        double v = alpha;
        for (std::size_t k = 0; k < ad.blocks.size(); ++k) {
            const Eigen::VectorXd w = almon_weights(theta[k], ad.blocks[k].width, true);
            v += beta[k] * ad.X.row(r).segment(ad.blocks[k].first_col, ad.blocks[k].width).dot(w);
        }
        ad.y[r] = v + (noise_sd > 0 ? noise_sd * rng.normal() : 0.0);
    }
}

}  // namespace

TEST_CASE("almon weights: flat, hand-evaluated, and peaked cases") {
    const Eigen::VectorXd flat = almon_weights({0.0, 0.0}, 3, true);
    for (int i = 0; i < 3; ++i) CHECK(flat[i] == doctest::Approx(1.0 / 3).epsilon(1e-14));

    // theta = (ln 2, 0): raw weights 2, 4 -> normalized 1/3, 2/3
    const Eigen::VectorXd two = almon_weights({std::log(2.0), 0.0}, 2, true);
    CHECK(two[0] == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(two[1] == doctest::Approx(2.0 / 3).epsilon(1e-12));

    // theta = (0.7, -0.5), J=12: sums to one with a single interior peak
    const Eigen::VectorXd peaked = almon_weights({0.7, -0.5}, 12, true);
    CHECK(peaked.sum() == doctest::Approx(1.0).epsilon(1e-14));
    int peak = 0;
    for (int i = 1; i < 12; ++i)
        if (peaked[i] > peaked[peak]) peak = i;
    CHECK(peak == 0);  // exp(0.7i - 0.5i^2) is maximal at i=1
    for (int i = peak + 1; i < 12; ++i) CHECK(peaked[i] < peaked[i - 1]);

    // direct formula evaluation oracle
    double denom = 0.0;
    for (int i = 1; i <= 12; ++i) denom += std::exp(0.7 * i - 0.5 * i * i);
    for (int i = 1; i <= 12; ++i)
        CHECK(peaked[i - 1] ==
              doctest::Approx(std::exp(0.7 * i - 0.5 * i * i) / denom).epsilon(1e-12));
}

TEST_CASE("almon weights: interior peak for slow decay") {
    const Eigen::VectorXd w = almon_weights({0.7, -0.1}, 12, true);
    int peak = 0;
    for (int i = 1; i < 12; ++i)
        if (w[i] > w[peak]) peak = i;
    CHECK(peak > 0);
    CHECK(peak < 11);
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("normalized almon weights match the naive evaluation where finite") {
    Rng rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        const AlmonTheta theta{rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const int J = 2 + static_cast<int>(rng.index(23));
        const Eigen::VectorXd w = almon_weights(theta, J, true);
        CHECK(w.minCoeff() >= 0.0);
        CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));

        // naive evaluation without the guard
        double denom = 0.0;
        Eigen::VectorXd naive(J);
        for (int i = 1; i <= J; ++i) {
            naive[i - 1] = std::exp(theta.theta1 * i + theta.theta2 * i * i);
            denom += naive[i - 1];
        }
        if (std::isfinite(denom) && denom > 0.0) {
            for (int i = 0; i < J; ++i) {
                if (!std::isfinite(naive[i] / denom)) continue;
                CHECK(w[i] == doctest::Approx(naive[i] / denom).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("non-normalized weights overflow to NumericalError") {
    CHECK_NOTHROW(almon_weights({0.5, -0.1}, 12, false));
    CHECK_THROWS_AS(almon_weights({100.0, 10.0}, 24, false), NumericalError);
}

TEST_CASE("almon weight jacobian matches finite differences") {
    Rng rng(5);
    for (bool normalized : {true, false}) {
        for (int trial = 0; trial < 10; ++trial) {
            const AlmonTheta theta{rng.uniform(-1, 1), rng.uniform(-0.5, -0.01)};
            const int J = 3 + static_cast<int>(rng.index(10));
            const Eigen::MatrixXd jac = almon_weight_jacobian(theta, J, normalized);
            const double eps = 1e-6;
            for (int d = 0; d < 2; ++d) {
                AlmonTheta up = theta, dn = theta;
                (d == 0 ? up.theta1 : up.theta2) += eps;
                (d == 0 ? dn.theta1 : dn.theta2) -= eps;
                const Eigen::VectorXd fd =
                    (almon_weights(up, J, normalized) - almon_weights(dn, J, normalized)) /
                    (2 * eps);
                for (int i = 0; i < J; ++i)
                    CHECK(jac(i, d) == doctest::Approx(fd[i]).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("umidas recovers planted coefficients exactly") {
    Rng rng(11);
    AlignedDesign ad = random_design(100, {10}, rng);
    Eigen::VectorXd b(10);
    for (int i = 0; i < 10; ++i) b[i] = rng.uniform(-2, 2);
    const double alpha = 0.75;
    ad.y = Eigen::VectorXd::Constant(100, alpha) + ad.X * b;

    const UMidasFit fit = umidas_fit(ad);
    CHECK(fit.alpha == doctest::Approx(alpha).epsilon(1e-8));
    for (int i = 0; i < 10; ++i) CHECK(fit.coef[i] == doctest::Approx(b[i]).epsilon(1e-8));
}

TEST_CASE("umidas matches the normal-equations oracle") {
    Rng rng(13);
    AlignedDesign ad = random_design(12, {4}, rng);
    for (int r = 0; r < 12; ++r) ad.y[r] = rng.normal();

    const UMidasFit fit = umidas_fit(ad);

    Eigen::MatrixXd D(12, 5);
    D.col(0).setOnes();
    D.rightCols(4) = ad.X;
    const Eigen::VectorXd oracle = (D.transpose() * D).ldlt().solve(D.transpose() * ad.y);
    CHECK(fit.alpha == doctest::Approx(oracle[0]).epsilon(1e-8));
    for (int i = 0; i < 4; ++i) CHECK(fit.coef[i] == doctest::Approx(oracle[i + 1]).epsilon(1e-8));

    // residual orthogonality (normal equations)
    Eigen::VectorXd coef(5);
    coef[0] = fit.alpha;
    coef.tail(4) = fit.coef;
    const Eigen::VectorXd resid = ad.y - D * coef;
    CHECK((D.transpose() * resid).lpNorm<Eigen::Infinity>() <=
          1e-8 * std::max(1.0, ad.y.norm()));
}

TEST_CASE("umidas column counts for the K=3, lags 0..11 design") {
    Rng rng(17);
    AlignedDesign ad = random_design(60, {12, 12, 12}, rng);
    for (int r = 0; r < 60; ++r) ad.y[r] = rng.normal();
    const UMidasFit fit = umidas_fit(ad);
    CHECK(fit.coef.size() == 36);
    CHECK(fit.columns.size() == 36);
}

TEST_CASE("umidas names dependent columns") {
    Rng rng(19);
    AlignedDesign ad = random_design(30, {3}, rng);
    ad.X.col(2) = 2.0 * ad.X.col(0);  // exact collinearity
    for (int r = 0; r < 30; ++r) ad.y[r] = rng.normal();
    CHECK_THROWS_AS(umidas_fit(ad), SingularDesignError);
    try {
        umidas_fit(ad);
    } catch (const SingularDesignError& e) {
        CHECK(std::string(e.what()).find("x1") != std::string::npos);
    }
}

TEST_CASE("midas_fit recovers planted parameters on noiseless data") {
    Rng rng(23);
    AlignedDesign ad = random_design(200, {12}, rng);
    plant_midas_response(ad, 0.5, {1.0}, {{0.7, -0.5}}, 0.0, rng);

    const MidasFit fit = midas_fit(ad, {Weighting::NormalizedAlmon}, RandomSeed{3});
    REQUIRE(fit.covariates.size() == 1);
    CHECK(fit.alpha == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(fit.covariates[0].beta == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(fit.covariates[0].theta.theta1 == doctest::Approx(0.7).epsilon(1e-3));
    CHECK(fit.covariates[0].theta.theta2 == doctest::Approx(-0.5).epsilon(1e-3));

    // midas coefficients reproducible from (beta, theta)
    const Eigen::VectorXd w = almon_weights(fit.covariates[0].theta, 12, true);
    for (int i = 0; i < 12; ++i)
        CHECK(fit.covariates[0].midas_coef[i] ==
              doctest::Approx(fit.covariates[0].beta * w[i]).epsilon(1e-12));
}

TEST_CASE("midas_fit profiling identity: beta equals weighted-regressor OLS") {
    Rng rng(29);
    AlignedDesign ad = random_design(150, {12}, rng);
    plant_midas_response(ad, -0.25, {1.5}, {{0.7, -0.5}}, 0.0, rng);
    const MidasFit fit = midas_fit(ad, {Weighting::NormalizedAlmon}, RandomSeed{4});

    // direct OLS of y on the regressor aggregated with the *estimated* weights
    const Eigen::VectorXd w = almon_weights(fit.covariates[0].theta, 12, true);
    Eigen::MatrixXd D(150, 2);
    D.col(0).setOnes();
    D.col(1) = ad.X * w;
    const Eigen::VectorXd coef = (D.transpose() * D).ldlt().solve(D.transpose() * ad.y);
    CHECK(fit.alpha == doctest::Approx(coef[0]).epsilon(1e-8));
    CHECK(fit.covariates[0].beta == doctest::Approx(coef[1]).epsilon(1e-8));
}

TEST_CASE("midas_fit on noisy data beats the true parameters in-sample") {
    Rng rng(31);
    for (int trial = 0; trial < 3; ++trial) {
        AlignedDesign ad = random_design(80, {12, 12}, rng);
        const std::vector<double> beta{1.0, -0.5};
        const std::vector<AlmonTheta> theta{{0.7, -0.5}, {0.0, -0.1}};
        plant_midas_response(ad, 0.4, beta, theta, 1.0, rng);

        const MidasFit fit =
            midas_fit(ad, {Weighting::NormalizedAlmon, Weighting::NormalizedAlmon}, RandomSeed{5});

        std::vector<MidasCovariateFit> truth(2);
        truth[0].beta = beta[0];
        truth[0].theta = theta[0];
        truth[0].weighting = Weighting::NormalizedAlmon;
        truth[1].beta = beta[1];
        truth[1].theta = theta[1];
        truth[1].weighting = Weighting::NormalizedAlmon;
        const double rss_truth = midas_rss(ad, 0.4, truth);
        CHECK(fit.rss <= rss_truth + 1e-9);
    }
}

TEST_CASE("unrestricted fit never loses to the restricted fit in-sample") {
    Rng rng(37);
    for (int trial = 0; trial < 5; ++trial) {
        AlignedDesign ad = random_design(60, {8, 8}, rng);
        for (int r = 0; r < 60; ++r) ad.y[r] = rng.normal();
        const MidasFit restricted =
            midas_fit(ad, {Weighting::NormalizedAlmon, Weighting::NormalizedAlmon}, RandomSeed{6});
        const UMidasFit unrestricted = umidas_fit(ad);
        CHECK(unrestricted.rss <= restricted.rss + 1e-9);
    }
}

TEST_CASE("midas_fit is scale consistent") {
    Rng rng(41);
    AlignedDesign ad = random_design(200, {12}, rng);
    plant_midas_response(ad, 0.2, {1.2}, {{0.7, -0.5}}, 0.0, rng);
    const MidasFit base = midas_fit(ad, {Weighting::NormalizedAlmon}, RandomSeed{7});

    const double c = 4.0;
    AlignedDesign scaled = ad;
    scaled.X *= c;
    const MidasFit rescaled = midas_fit(scaled, {Weighting::NormalizedAlmon}, RandomSeed{7});

    CHECK(rescaled.covariates[0].beta == doctest::Approx(base.covariates[0].beta / c).epsilon(1e-5));
    CHECK(rescaled.covariates[0].theta.theta1 ==
          doctest::Approx(base.covariates[0].theta.theta1).epsilon(1e-4));
    const Eigen::VectorXd f0 = predict(base, ad);
    const Eigen::VectorXd f1 = predict(rescaled, scaled);
    for (int r = 0; r < ad.rows(); ++r) CHECK(f0[r] == doctest::Approx(f1[r]).epsilon(1e-6));
}

TEST_CASE("predict: zero slope means constant alpha") {
    Rng rng(43);
    AlignedDesign ad = random_design(20, {6}, rng);
    MidasFit fit;
    fit.alpha = 2.5;
    MidasCovariateFit cov;
    cov.id = "x1";
    cov.beta = 0.0;
    cov.theta = {0.3, -0.2};
    cov.midas_coef = Eigen::VectorXd::Zero(6);
    fit.covariates.push_back(cov);
    fit.columns = ad.columns;
    fit.blocks = ad.blocks;
    const Eigen::VectorXd pred = predict(fit, ad);
    for (int r = 0; r < 20; ++r) CHECK(pred[r] == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("umidas predict matches a hand dot product") {
    Rng rng(47);
    AlignedDesign ad = random_design(15, {5}, rng);
    for (int r = 0; r < 15; ++r) ad.y[r] = rng.normal();
    const UMidasFit fit = umidas_fit(ad);
    const Eigen::VectorXd pred = predict(fit, ad);
    const int r = 14;
    double hand = fit.alpha;
    for (int c = 0; c < 5; ++c) hand += fit.coef[c] * ad.X(r, c);
    CHECK(pred[r] == doctest::Approx(hand).epsilon(1e-12));

    // in-sample fitted values leave residuals orthogonal to the regressors
    const Eigen::VectorXd resid = ad.y - pred;
    for (int c = 0; c < 5; ++c)
        CHECK(std::abs(ad.X.col(c).dot(resid)) <= 1e-8 * std::max(1.0, ad.y.norm()));
}

TEST_CASE("ar1 on a constant series forecasts the constant") {
    const std::vector<double> ones(10, 1.0);
    const Ar1Fit fit = ar1_fit(ones, 1);
    CHECK(predict(fit, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ar1 matches closed-form OLS") {
    Rng rng(53);
    std::vector<double> y(50);
    y[0] = 0;
    for (int t = 1; t < 50; ++t) y[t] = 0.3 + 0.6 * y[t - 1] + rng.normal();
    const Ar1Fit fit = ar1_fit(y, 1);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = 49;
    for (int t = 1; t < 50; ++t) {
        sx += y[t - 1];
        sy += y[t];
        sxx += y[t - 1] * y[t - 1];
        sxy += y[t - 1] * y[t];
    }
    const double slope = (sxy - sx * sy / n) / (sxx - sx * sx / n);
    const double intercept = (sy - slope * sx) / n;
    CHECK(fit.slope == doctest::Approx(slope).epsilon(1e-10));
    CHECK(fit.intercept == doctest::Approx(intercept).epsilon(1e-10));
}

TEST_CASE("predict rejects mismatched column layouts") {
    Rng rng(59);
    AlignedDesign ad = random_design(20, {4}, rng);
    for (int r = 0; r < 20; ++r) ad.y[r] = rng.normal();
    const UMidasFit fit = umidas_fit(ad);
    AlignedDesign other = random_design(20, {5}, rng);
    CHECK_THROWS_AS(predict(fit, other), ShapeError);
}
