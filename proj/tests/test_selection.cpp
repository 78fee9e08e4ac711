#include <doctest.h>

#include <cmath>

#include "mfcast/selection.hpp"
#include "mfcast/rng.hpp"

using namespace mfcast;

namespace {

// Orthonormal-in-the-standardized-metric design: columns mean zero, unit
// population variance, mutually orthogonal.
Eigen::MatrixXd orthonormal_design(int n, int p, Rng& rng) {
    Eigen::MatrixXd g(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) g(i, j) = rng.normal();
    g.rowwise() -= g.colwise().mean();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = Eigen::MatrixXd(qr.householderQ()).leftCols(p);
    return std::sqrt(static_cast<double>(n)) * q;
}

AlignedDesign design_from_matrix(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 int block_width) {
    AlignedDesign ad;
    const int p = static_cast<int>(X.cols());
    int col = 0, k = 0;
    while (col < p) {
        const int w = std::min(block_width, p - col);
        ad.blocks.push_back({"v" + std::to_string(++k), col, w, 0, 1, 0, false});
        for (int j = 0; j < w; ++j) ad.columns.push_back({ad.blocks.back().series_id, j, false});
        col += w;
    }
    ad.X = X;
    ad.y = y;
    ad.valid.assign(X.rows(), 1);
    ad.period.resize(X.rows());
    for (int r = 0; r < X.rows(); ++r) ad.period[r] = r + 1;
    return ad;
}

}  // namespace

TEST_CASE("grid enumeration covers the simulation-protocol combination count") {
    HyperGrid grid;
    grid.epochs = {25, 50};
    grid.dropout = {0.0, 0.4};
    grid.batch = {BatchSpec::abs(1), BatchSpec::frac(0.1), BatchSpec::frac(0.5)};
    grid.cells = {{16}, {32}, {64}, {128}};
    CHECK(grid.combination_count() == 48);
    CHECK(enumerate_grid(grid, 30).size() == 48);
}

TEST_CASE("batch fractions resolve with a ceiling") {
    CHECK(BatchSpec::frac(0.1).resolve(29) == 3);   // ceil(2.9)
    CHECK(BatchSpec::frac(0.5).resolve(29) == 15);  // ceil(14.5)
    CHECK(BatchSpec::frac(0.5).resolve(30) == 15);
    CHECK(BatchSpec::abs(1).resolve(29) == 1);
}

TEST_CASE("grid search returns a singleton grid unchanged") {
    HyperGrid grid;
    grid.epochs = {25};
    grid.dropout = {0.4};
    grid.batch = {BatchSpec::abs(4)};
    grid.cells = {{8}};
    const auto result = grid_search(
        grid, 10, 3, RandomSeed{1},
        [](const HyperChoice&, int, RandomSeed) { return 1.25; },
        [](const HyperChoice&) { return 100L; });
    CHECK(result.best.epochs == 25);
    CHECK(result.best.dropout == 0.4);
    CHECK(result.table.size() == 1);
    CHECK(result.table[0].mean_rmsfe == doctest::Approx(1.25));
}

TEST_CASE("grid search finds a planted minimum") {
    HyperGrid grid;
    grid.epochs = {25, 50};
    grid.dropout = {0.0, 0.4};
    grid.batch = {BatchSpec::abs(1), BatchSpec::abs(2), BatchSpec::abs(3)};
    grid.cells = {{16}, {32}, {64}, {128}};

    // unique minimum at (50, 0.4, 2, 64)
    auto planted = [](const HyperChoice& c, int, RandomSeed) {
        double score = 10.0;
        score -= (c.epochs == 50) ? 1 : 0;
        score -= (c.dropout == 0.4) ? 1 : 0;
        score -= (c.batch.value == 2) ? 1 : 0;
        score -= (c.cells[0] == 64) ? 1 : 0;
        return score;
    };
    const auto result = grid_search(grid, 10, 2, RandomSeed{2}, planted,
                                    [](const HyperChoice&) { return 0L; });
    CHECK(result.best.epochs == 50);
    CHECK(result.best.dropout == 0.4);
    CHECK(result.best.batch.value == 2);
    CHECK(result.best.cells[0] == 64);
}

TEST_CASE("grid search tie-break prefers fewer parameters then enumeration order") {
    HyperGrid grid;
    grid.cells = {{64}, {16}, {32}};
    const auto result = grid_search(
        grid, 0, 1, RandomSeed{3},
        [](const HyperChoice&, int, RandomSeed) { return 1.0; },
        [](const HyperChoice& c) { return static_cast<long>(c.cells[0]); });
    CHECK(result.best.cells[0] == 16);

    const auto no_params = grid_search(
        grid, 0, 1, RandomSeed{3},
        [](const HyperChoice&, int, RandomSeed) { return 1.0; },
        [](const HyperChoice&) { return 7L; });
    CHECK(no_params.best.cells[0] == 64);  // first in enumeration order
}

TEST_CASE("grid search reports failures and throws when everything fails") {
    HyperGrid grid;
    grid.epochs = {25, 50};
    const auto result = grid_search(
        grid, 0, 3, RandomSeed{4},
        [](const HyperChoice& c, int repeat, RandomSeed) -> double {
            if (c.epochs == 25) throw NumericalError("boom");
            if (repeat == 1) throw NumericalError("flaky");
            return 2.0;
        },
        [](const HyperChoice&) { return 0L; });
    CHECK(result.best.epochs == 50);
    CHECK(result.table[0].n_fail == 3);
    CHECK(result.table[1].n_fail == 1);

    CHECK_THROWS_AS(grid_search(
                        grid, 0, 1, RandomSeed{5},
                        [](const HyperChoice&, int, RandomSeed) -> double {
                            throw NumericalError("always");
                        },
                        [](const HyperChoice&) { return 0L; }),
                    SelectionError);
}

TEST_CASE("lasso at lambda zero matches OLS") {
    Rng rng(21);
    const int n = 60, p = 5;
    Eigen::MatrixXd X(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
    Eigen::VectorXd beta(p);
    for (int j = 0; j < p; ++j) beta[j] = rng.uniform(-2, 2);
    Eigen::VectorXd y = X * beta;
    for (int i = 0; i < n; ++i) y[i] += 0.5 + 0.3 * rng.normal();

    const LassoFit fit = lasso_fit(X, y, 0.0);

    Eigen::MatrixXd D(n, p + 1);
    D.col(0).setOnes();
    D.rightCols(p) = X;
    const Eigen::VectorXd ols = (D.transpose() * D).ldlt().solve(D.transpose() * y);
    CHECK(fit.intercept == doctest::Approx(ols[0]).epsilon(1e-6));
    for (int j = 0; j < p; ++j) CHECK(fit.coef[j] == doctest::Approx(ols[j + 1]).epsilon(1e-6));
}

TEST_CASE("lasso at lambda_max shrinks every slope to zero") {
    Rng rng(22);
    const int n = 40, p = 6;
    Eigen::MatrixXd X(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.normal();

    const double lmax = lasso_lambda_max(X, y);
    const LassoFit fit = lasso_fit(X, y, lmax);
    for (int j = 0; j < p; ++j) CHECK(fit.coef[j] == 0.0);

    const LassoFit below = lasso_fit(X, y, lmax * 0.9);
    double l1 = 0;
    for (int j = 0; j < p; ++j) l1 += std::abs(below.coef[j]);
    CHECK(l1 > 0.0);
}

TEST_CASE("lasso on an orthonormal design equals soft-thresholded OLS") {
    Rng rng(23);
    const int n = 80, p = 6;
    const Eigen::MatrixXd X = orthonormal_design(n, p, rng);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.normal() * 2.0 + 1.0;

    const double ybar = y.mean();
    for (double lambda : {0.02, 0.1, 0.3}) {
        const LassoFit fit = lasso_fit(X, y, lambda);
        for (int j = 0; j < p; ++j) {
            const double ols = X.col(j).dot(y - Eigen::VectorXd::Constant(n, ybar)) / n;
            const double soft =
                ols > lambda ? ols - lambda : (ols < -lambda ? ols + lambda : 0.0);
            CHECK(fit.coef[j] == doctest::Approx(soft).epsilon(1e-8));
        }
    }
}

TEST_CASE("lasso path l1 norm shrinks as lambda grows") {
    Rng rng(24);
    const int n = 50, p = 8;
    Eigen::MatrixXd X(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
    Eigen::VectorXd y = X.leftCols(3) * Eigen::Vector3d(1.5, -1.0, 0.5);
    for (int i = 0; i < n; ++i) y[i] += rng.normal();

    const LassoPath path = lasso_path(X, y, 40);
    for (int i = 1; i < 40; ++i) {
        const double prev = path.coefs.col(i - 1).lpNorm<1>();
        const double cur = path.coefs.col(i).lpNorm<1>();
        CHECK(cur >= prev - 1e-9);  // lambdas descend along the path
    }
}

TEST_CASE("lasso drops zero-variance columns with a warning") {
    Rng rng(25);
    const int n = 30;
    Eigen::MatrixXd X(n, 3);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = rng.normal();
        X(i, 1) = 1.0;  // constant
        X(i, 2) = rng.normal();
    }
    Eigen::VectorXd y = X.col(0) - X.col(2);
    const LassoFit fit = lasso_fit(X, y, 0.01);
    CHECK(fit.coef[1] == 0.0);
    CHECK(!fit.warnings.empty());
}

TEST_CASE("lasso_select keeps forced variables and reduces folds") {
    Rng rng(26);
    const int n = 24;
    Eigen::MatrixXd X(n, 6);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < 6; ++j) X(i, j) = rng.normal();
    // only blocks v1 (cols 0-1) and v2 (cols 2-3) matter
    Eigen::VectorXd y = 2.0 * X.col(0) + 1.5 * X.col(2);
    for (int i = 0; i < n; ++i) y[i] += 0.1 * rng.normal();
    AlignedDesign ad = design_from_matrix(X, y, 2);

    const LassoSelection sel = lasso_select(ad, 4, 30, {"v3"});
    bool has_v1 = false, has_v3 = false;
    for (const auto& id : sel.selected) {
        has_v1 = has_v1 || id == "v1";
        has_v3 = has_v3 || id == "v3";
    }
    CHECK(has_v1);
    CHECK(has_v3);  // forced in even if the lasso zeroes it

    const LassoSelection reduced = lasso_select(ad, 100, 20, {});
    CHECK(reduced.folds_used < 100);
    CHECK(!reduced.warnings.empty());

    AlignedDesign tiny = design_from_matrix(X.topRows(4), y.head(4), 2);
    CHECK_THROWS_AS(lasso_select(tiny, 4, 20, {}), SelectionError);
}
