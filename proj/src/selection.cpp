#include "mfcast/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mfcast/errors.hpp"

namespace mfcast {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string BatchSpec::str() const {
    if (absolute) return std::to_string(value);
    std::ostringstream os;
    os << "ceil(" << fraction << "*input)";
    return os.str();
}

bool HyperGrid::empty() const {
    return epochs.empty() || dropout.empty() || batch.empty() || cells.empty() ||
           timesteps.empty() || monthly_lags.empty() || quarterly_lags.empty();
}

long HyperGrid::combination_count() const {
    if (empty()) return 0;
    return static_cast<long>(epochs.size()) * dropout.size() * batch.size() * cells.size() *
           timesteps.size() * monthly_lags.size() * quarterly_lags.size();
}

std::string HyperChoice::str() const {
    std::ostringstream os;
    os << "epochs=" << epochs << " dropout=" << dropout << " batch=" << batch.str()
       << " cells=(";
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << ") timesteps=" << timesteps;
    if (p_m > 0) os << " p_m=" << p_m;
    if (p_q > 0) os << " p_q=" << p_q;
    return os.str();
}

std::vector<HyperChoice> enumerate_grid(const HyperGrid& grid, int input_size_hint) {
    std::vector<HyperChoice> out;
    long index = 0;
    for (int e : grid.epochs)
        for (double d : grid.dropout)
            for (const BatchSpec& b : grid.batch)
                for (const auto& c : grid.cells)
                    for (int ts : grid.timesteps)
                        for (int pm : grid.monthly_lags)
                            for (int pq : grid.quarterly_lags) {
                                HyperChoice choice;
                                choice.epochs = e;
                                choice.dropout = d;
                                choice.batch = b;
                                choice.resolved_batch = b.resolve(input_size_hint);
                                choice.cells = c;
                                choice.timesteps = ts;
                                choice.p_m = pm;
                                choice.p_q = pq;
                                choice.grid_index = index++;
                                out.push_back(std::move(choice));
                            }
    return out;
}

GridSearchResult grid_search(const HyperGrid& grid, int input_size_hint, int repeats,
                             RandomSeed seed, const GridEvaluator& evaluate,
                             const ParamCounter& parameter_count) {
    if (grid.empty()) throw SelectionError("grid_search: empty grid");
    if (repeats < 1) throw SelectionError("grid_search: repeats must be >= 1");

    GridSearchResult result;
    const std::vector<HyperChoice> choices = enumerate_grid(grid, input_size_hint);

    long best_idx = -1;
    double best_score = kInf;
    long best_params = 0;
    for (const HyperChoice& choice : choices) {
        double sum = 0.0;
        int ok = 0, fail = 0;
        for (int r = 0; r < repeats; ++r) {
            try {
                const double score =
                    evaluate(choice, r, subseed(seed, "grid-repeat",
                                                static_cast<std::uint64_t>(r) * 1000003 +
                                                    static_cast<std::uint64_t>(choice.grid_index)));
                if (!std::isfinite(score)) throw NumericalError("non-finite score");
                sum += score;
                ++ok;
            } catch (const Error&) {
                ++fail;
            }
        }
        GridScoreRow row;
        row.choice = choice;
        row.n_fail = fail;
        row.mean_rmsfe = ok > 0 ? sum / ok : kInf;
        result.table.push_back(row);

        if (ok == 0) continue;
        const long params = parameter_count ? parameter_count(choice) : 0;
        const bool better =
            row.mean_rmsfe < best_score ||
            (row.mean_rmsfe == best_score &&
             (params < best_params || (params == best_params && choice.grid_index < best_idx)));
        if (best_idx < 0 || better) {
            best_idx = choice.grid_index;
            best_score = row.mean_rmsfe;
            best_params = params;
        }
    }
    if (best_idx < 0) throw SelectionError("grid_search: every combination failed");
    result.best = choices[static_cast<std::size_t>(best_idx)];
    return result;
}

// ---------------------------------------------------------------------------
// LASSO

namespace {

struct Standardized {
    Eigen::MatrixXd X;       // zero-variance columns zeroed out
    Eigen::VectorXd mean, sd;
    Eigen::VectorXd yc;
    double y_mean = 0.0;
    std::vector<bool> usable;
    std::vector<std::string> warnings;
};

Standardized standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    if (n != y.size()) throw ShapeError("lasso: X/y row mismatch");
    if (n < 2) throw DomainError("lasso: need at least 2 rows");

    Standardized s;
    s.X = X;
    s.mean = X.colwise().mean();
    s.sd.resize(p);
    s.usable.assign(p, true);
    for (int j = 0; j < p; ++j) {
        const double var = (X.col(j).array() - s.mean[j]).square().sum() / n;
        if (var <= 1e-24) {
            s.usable[j] = false;
            s.sd[j] = 1.0;
            s.X.col(j).setZero();
            s.warnings.push_back("lasso: dropped zero-variance column " + std::to_string(j));
        } else {
            s.sd[j] = std::sqrt(var);
            s.X.col(j) = (X.col(j).array() - s.mean[j]) / s.sd[j];
        }
    }
    s.y_mean = y.mean();
    s.yc = y.array() - s.y_mean;
    return s;
}

// Cyclic coordinate descent on standardized data; `b` is used as warm start.
void coordinate_descent(const Eigen::MatrixXd& Xs, const Eigen::VectorXd& yc,
                        const std::vector<bool>& usable, double lambda, Eigen::VectorXd& b) {
    const int n = static_cast<int>(Xs.rows());
    const int p = static_cast<int>(Xs.cols());
    Eigen::VectorXd r = yc - Xs * b;
    constexpr int kMaxSweeps = 100000;
    constexpr double kTol = 1e-7;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double max_delta = 0.0;
        for (int j = 0; j < p; ++j) {
            if (!usable[j]) continue;
            const double rho = Xs.col(j).dot(r) / n + b[j];
            double bj = 0.0;
            if (rho > lambda) {
                bj = rho - lambda;
            } else if (rho < -lambda) {
                bj = rho + lambda;
            }
            const double delta = bj - b[j];
            if (delta != 0.0) {
                r -= delta * Xs.col(j);
                b[j] = bj;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        if (max_delta < kTol) break;
    }
}

}  // namespace

double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const Standardized s = standardize(X, y);
    const int n = static_cast<int>(X.rows());
    double m = 0.0;
    for (int j = 0; j < X.cols(); ++j) {
        if (!s.usable[j]) continue;
        m = std::max(m, std::abs(s.X.col(j).dot(s.yc)) / n);
    }
    return m;
}

LassoFit lasso_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda) {
    if (lambda < 0.0) throw DomainError("lasso_fit: lambda must be >= 0");
    const Standardized s = standardize(X, y);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(X.cols());
    coordinate_descent(s.X, s.yc, s.usable, lambda, b);

    LassoFit fit;
    fit.warnings = s.warnings;
    fit.coef.resize(X.cols());
    double cross = 0.0;
    for (int j = 0; j < X.cols(); ++j) {
        fit.coef[j] = s.usable[j] ? b[j] / s.sd[j] : 0.0;
        cross += fit.coef[j] * s.mean[j];
    }
    fit.intercept = s.y_mean - cross;
    return fit;
}

LassoPath lasso_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int n_lambda) {
    if (n_lambda < 2) throw DomainError("lasso_path: need at least 2 lambdas");
    const Standardized s = standardize(X, y);
    const double lmax = lasso_lambda_max(X, y);
    if (lmax <= 0.0) throw DomainError("lasso_path: degenerate design (no usable columns)");

    LassoPath path;
    path.warnings = s.warnings;
    path.lambdas.resize(n_lambda);
    const double lmin = 1e-4 * lmax;
    for (int i = 0; i < n_lambda; ++i) {
        const double f = static_cast<double>(i) / (n_lambda - 1);
        path.lambdas[i] = std::exp(std::log(lmax) + f * (std::log(lmin) - std::log(lmax)));
    }

    path.coefs.resize(X.cols(), n_lambda);
    path.intercepts.resize(n_lambda);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(X.cols());  // warm start across the path
    for (int i = 0; i < n_lambda; ++i) {
        coordinate_descent(s.X, s.yc, s.usable, path.lambdas[i], b);
        double cross = 0.0;
        for (int j = 0; j < X.cols(); ++j) {
            path.coefs(j, i) = s.usable[j] ? b[j] / s.sd[j] : 0.0;
            cross += path.coefs(j, i) * s.mean[j];
        }
        path.intercepts[i] = s.y_mean - cross;
    }
    return path;
}

LassoSelection lasso_select(const AlignedDesign& ad, int folds, int n_lambda,
                            const std::set<std::string>& always_include) {
    if (folds < 1) throw SelectionError("lasso_select: folds must be >= 1");
    const Eigen::MatrixXd X = ad.valid_X();
    const Eigen::VectorXd y = ad.valid_y();
    const int n = static_cast<int>(X.rows());

    constexpr int kMinTrain = 5;
    LassoSelection sel;
    int usable_folds = std::min(folds, n - kMinTrain);
    if (usable_folds < folds) {
        sel.warnings.push_back("lasso_select: reduced folds from " + std::to_string(folds) +
                               " to " + std::to_string(std::max(0, usable_folds)));
    }
    if (usable_folds < 1) throw SelectionError("lasso_select: no usable folds");
    sel.folds_used = usable_folds;

    // Shared lambda grid from the full window.
    const double lmax = lasso_lambda_max(X, y);
    if (lmax <= 0.0) throw SelectionError("lasso_select: degenerate design");
    Eigen::VectorXd lambdas(n_lambda);
    const double lmin = 1e-4 * lmax;
    for (int i = 0; i < n_lambda; ++i) {
        const double f = static_cast<double>(i) / (n_lambda - 1);
        lambdas[i] = std::exp(std::log(lmax) + f * (std::log(lmin) - std::log(lmax)));
    }

    Eigen::VectorXd cv = Eigen::VectorXd::Zero(n_lambda);
    for (int fold = 0; fold < usable_folds; ++fold) {
        const int test_row = n - usable_folds + fold;
        const Eigen::MatrixXd Xtr = X.topRows(test_row);
        const Eigen::VectorXd ytr = y.head(test_row);
        const Standardized s = standardize(Xtr, ytr);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(X.cols());
        for (int i = 0; i < n_lambda; ++i) {
            coordinate_descent(s.X, s.yc, s.usable, lambdas[i], b);
            double pred = s.y_mean;
            for (int j = 0; j < X.cols(); ++j) {
                if (!s.usable[j]) continue;
                pred += b[j] / s.sd[j] * (X(test_row, j) - s.mean[j]);
            }
            const double e = y[test_row] - pred;
            cv[i] += e * e;
        }
    }
    cv /= usable_folds;

    int best = 0;
    for (int i = 1; i < n_lambda; ++i)
        if (cv[i] < cv[best]) best = i;  // ties keep the larger lambda
    sel.lambda = lambdas[best];

    const LassoFit fit = lasso_fit(X, y, sel.lambda);
    for (const auto& w : fit.warnings) sel.warnings.push_back(w);

    for (const auto& block : ad.blocks) {
        if (block.is_ar) continue;
        bool nonzero = false;
        for (int j = block.first_col; j < block.first_col + block.width && !nonzero; ++j)
            nonzero = fit.coef[j] != 0.0;
        if (nonzero || always_include.count(block.series_id))
            sel.selected.push_back(block.series_id);
    }
    for (const auto& id : always_include) {
        bool present = false;
        for (const auto& v : sel.selected) present = present || v == id;
        if (!present) sel.selected.push_back(id);
    }
    return sel;
}

}  // namespace mfcast
