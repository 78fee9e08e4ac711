#pragma once

#include <string>
#include <vector>

#include "mfcast/errors.hpp"

namespace mfcast {

// One out-of-sample forecast: produced at `origin`, aimed at `target` =
// origin + h in low-frequency periods, with high-frequency horizon h_m.
struct ForecastRecord {
    int origin = 0;
    int target = 0;
    int h_m = 0;
    double forecast = 0.0;
    double actual = 0.0;

    double error() const { return actual - forecast; }
};

struct DmResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool variance_fallback = false;  // long-run variance was negative; lag-0 used
};

// Root mean squared forecast error over the records.
double rmsfe(const std::vector<ForecastRecord>& records);
double rmsfe(const std::vector<double>& errors);

// Mean squared forecast error divided by the population variance of the
// evaluation-window actuals.
double relative_mse(const std::vector<ForecastRecord>& records,
                    const std::vector<double>& y_eval);

// Diebold-Mariano test of equal predictive accuracy under squared loss with
// rectangular HAC truncation at lag h-1 and a standard normal reference.
DmResult dm_test(const std::vector<double>& errors_a, const std::vector<double>& errors_b, int h);

// Running sum of squared-loss differentials; positive values mean the model
// beats the benchmark.
std::vector<double> cumsfe(const std::vector<double>& errors_bench,
                           const std::vector<double>& errors_model);

// Annual growth implied by four quarterly growth rates (known actuals first,
// then forecasts), compounding levels from the prior year's four quarterly
// levels.
double annualize(const std::vector<double>& quarterly_actuals,
                 const std::vector<double>& quarterly_forecasts,
                 const std::vector<double>& base_year_levels);

// Standard normal CDF (shared by the DM test and reporting code).
double normal_cdf(double z);

struct ModelHorizonReport {
    std::string model;
    int h_m = 0;
    std::string horizon_group;  // nowcast / mid / long
    int n_forecasts = 0;
    double rmsfe = 0.0;
    double rel_mse = 0.0;
    // Relative RMSFE and DM test against each named benchmark; NaN when a
    // benchmark is unavailable at this horizon.
    std::vector<std::string> benchmark;
    std::vector<double> rel_rmsfe;
    std::vector<double> dm_stat;
    std::vector<double> dm_p;
};

struct EvaluationReport {
    std::vector<ModelHorizonReport> rows;
};

// Builds the report from per-model forecast record sets. `benchmarks` names
// models inside `records` to compare against.
EvaluationReport evaluate_models(
    const std::vector<std::pair<std::string, std::vector<ForecastRecord>>>& records,
    const std::vector<std::string>& benchmarks);

std::string horizon_group_label(int h_m, int m);

}  // namespace mfcast
