#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mfcast/alignment.hpp"
#include "mfcast/rng.hpp"

namespace mfcast {

// Batch size candidate: an absolute count or a fraction of the effective
// training size, resolved with a ceiling.
struct BatchSpec {
    bool absolute = true;
    int value = 1;
    double fraction = 0.0;

    static BatchSpec abs(int v) { return {true, v, 0.0}; }
    static BatchSpec frac(double f) { return {false, 0, f}; }

    int resolve(int input_size) const {
        if (absolute) return value;
        return std::max(1, static_cast<int>(std::ceil(fraction * input_size)));
    }

    std::string str() const;
};

struct HyperGrid {
    std::vector<int> epochs = {25};
    std::vector<double> dropout = {0.0};
    std::vector<BatchSpec> batch = {BatchSpec::abs(1)};
    std::vector<std::vector<int>> cells = {{32}};
    std::vector<int> timesteps = {1};
    std::vector<int> monthly_lags = {0};    // P_M candidates; 0 = not applicable
    std::vector<int> quarterly_lags = {0};  // P_Q candidates; 0 = not applicable

    bool empty() const;
    long combination_count() const;
};

struct HyperChoice {
    int epochs = 25;
    double dropout = 0.0;
    BatchSpec batch = BatchSpec::abs(1);
    int resolved_batch = 1;
    std::vector<int> cells = {32};
    int timesteps = 1;
    int p_m = 0;
    int p_q = 0;
    long grid_index = 0;

    std::string str() const;
};

struct GridScoreRow {
    HyperChoice choice;
    double mean_rmsfe = 0.0;
    int n_fail = 0;
};

struct GridSearchResult {
    HyperChoice best;
    std::vector<GridScoreRow> table;
};

// Validation RMSFE of one hyperparameter combination for one repeat; throwing
// marks the combination failed for that repeat. `parameter_count` feeds the
// fewer-parameters tie-break.
using GridEvaluator = std::function<double(const HyperChoice&, int repeat, RandomSeed)>;
using ParamCounter = std::function<long(const HyperChoice&)>;

// Enumerates the grid's Cartesian product in declaration order, averages the
// evaluator over `repeats` seeded runs and returns the argmin. Ties go to
// fewer parameters, then to grid enumeration order.
GridSearchResult grid_search(const HyperGrid& grid, int input_size_hint, int repeats,
                             RandomSeed seed, const GridEvaluator& evaluate,
                             const ParamCounter& parameter_count);

std::vector<HyperChoice> enumerate_grid(const HyperGrid& grid, int input_size_hint);

// ---------------------------------------------------------------------------
// LASSO

struct LassoFit {
    double intercept = 0.0;
    Eigen::VectorXd coef;  // original scale
    std::vector<std::string> warnings;
};

// Coordinate descent on standardized columns with an unpenalized intercept;
// objective RSS/(2n) + lambda * l1(beta). Converges when the largest
// standardized-coefficient change drops below 1e-7.
LassoFit lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda);

struct LassoPath {
    Eigen::VectorXd lambdas;                 // descending
    Eigen::MatrixXd coefs;                   // p x n_lambda, original scale
    Eigen::VectorXd intercepts;
    std::vector<std::string> warnings;
};

LassoPath lasso_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int n_lambda = 100);

double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

struct LassoSelection {
    std::vector<std::string> selected;  // series ids, dataset order
    double lambda = 0.0;
    int folds_used = 0;
    std::vector<std::string> warnings;
};

// Rolling-origin variable selection: for each of the last `folds` valid rows,
// fit the path on the strictly earlier window and score the squared error at
// that row; pick the lambda minimizing mean CV error, refit on all rows, and
// return the series with any nonzero coefficient plus `always_include`.
LassoSelection lasso_select(const AlignedDesign& ad, int folds, int n_lambda,
                            const std::set<std::string>& always_include);

}  // namespace mfcast
