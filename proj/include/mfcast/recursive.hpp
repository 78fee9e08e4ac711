#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "mfcast/evaluation.hpp"
#include "mfcast/selection.hpp"
#include "mfcast/series.hpp"

namespace mfcast {

// Pseudo-real-time publication delays, expressed in months. With all zeros
// the information boundary is the pure h_m rule.
struct DelayPolicy {
    int monthly = 0;    // high-frequency covariates
    int quarterly = 0;  // low-frequency covariates
    int target = 0;     // the target's own history (AR terms)
};

enum class RecursiveKind { FaLstm, SaLstm, UniLstm, Ar1 };

struct RecursiveModelConfig {
    std::string name;
    RecursiveKind kind = RecursiveKind::FaLstm;
    HyperGrid grid;
    int tuning_estimations = 3;
    int final_estimations = 3;
    double tuning_split = 0.8;
    bool use_lasso = true;  // FA/SA only
    int lasso_folds = 4;
    int lasso_n_lambda = 50;
};

struct RecursiveConfig {
    std::vector<int> horizons = {1, 2, 3, 6, 9, 12};
    int oos_start = 0;  // first out-of-sample target period; 0 = last 20 percent
    DelayPolicy delays;
    std::set<std::string> always_include;
    int always_include_from = 0;  // target period from which inclusion is forced
    int max_epochs = 200;
    int early_stop_patience = 5;
    RandomSeed seed;
};

struct SelectionEvent {
    std::string model;
    int h_m = 0;
    int target = 0;
    std::vector<std::string> selected;
    double lambda = 0.0;
    HyperChoice chosen;
};

struct RecursiveResult {
    std::map<std::string, std::vector<ForecastRecord>> forecasts;
    std::vector<SelectionEvent> selections;
    std::vector<std::string> warnings;
};

// The recursive configuration protocol: at every out-of-sample origin and
// horizon, re-run LASSO variable selection and the lag/hyperparameter grid
// search on the information available at that origin, then forecast with the
// winning configuration (averaged over several seeded estimations).
RecursiveResult recursive_forecast(const MixedFrequencyDataset& ds,
                                   const std::vector<RecursiveModelConfig>& models,
                                   const RecursiveConfig& cfg);

// Effective alignment horizons under a delay policy.
int monthly_horizon(int h_m, const DelayPolicy& d);
int quarterly_horizon(int h_m, int m, const DelayPolicy& d);
int target_horizon(int h_m, int m, const DelayPolicy& d);

}  // namespace mfcast
