#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfcast/almon.hpp"
#include "mfcast/evaluation.hpp"
#include "mfcast/lstm.hpp"
#include "mfcast/midas.hpp"
#include "mfcast/selection.hpp"
#include "mfcast/series.hpp"

namespace mfcast {

enum class XProcess { IidNormal, Ar1 };

// Restricted-MIDAS data generating process: y_t is a normalized-Almon
// weighted sum of K high-frequency covariates plus Gaussian noise.
struct DgpConfig {
    int T = 50;
    int m = 3;
    int K = 3;
    int J = 11;  // maximum lag; lags 0..J enter the DGP
    double alpha = 0.0;
    std::vector<double> beta;        // per covariate; broadcast when size 1
    std::vector<AlmonTheta> theta;   // per covariate; broadcast when size 1
    XProcess x_process = XProcess::IidNormal;
    double rho = 0.9;
    double noise_sd = 1.0;
    RandomSeed seed;

    void validate() const;
    std::vector<double> beta_resolved() const;
    std::vector<AlmonTheta> theta_resolved() const;
};

struct DgpDraw {
    MixedFrequencyDataset dataset;
    std::vector<double> conditional_mean;  // y minus its noise term, per period
};

MixedFrequencyDataset gen_dgp(const DgpConfig& cfg);
DgpDraw gen_dgp_full(const DgpConfig& cfg);

// Restricted/unrestricted MIDAS model specification used in the simulation
// protocol: which covariates, how many lags (starting at the forecast
// horizon) and the weighting family.
struct MidasModelSpec {
    std::vector<int> covariate_indices;
    int lag_count = 12;
    Weighting weighting = Weighting::NormalizedAlmon;

    std::string str() const;
};

struct EstimatorSpec {
    enum class Kind { Midas, UMidas, SaLstm, FaLstm, Oracle, PlantedError };

    Kind kind = Kind::Midas;
    std::string name;

    // LSTM settings.
    int timesteps = 1;
    LagSpec lags{0, 0};  // FA lag structure in the covariates' own units
    HyperChoice hyper;
    std::map<int, HyperChoice> hyper_by_horizon;

    // (U-)MIDAS settings; empty covariate list triggers the specification
    // search on tuning replications.
    std::optional<MidasModelSpec> midas;

    double planted_error = 0.0;

    bool is_lstm() const { return kind == Kind::SaLstm || kind == Kind::FaLstm; }
    const HyperChoice& hyper_for(int h_m) const;
};

struct RollingOutcome {
    std::vector<ForecastRecord> records;
    int n_skipped = 0;
};

// One-horizon-ahead rolling forecast without re-estimation: fit once on the
// first T1 periods, then predict every target from T1+h to T using covariate
// information through high-frequency index m*t - h_m.
RollingOutcome rolling_forecast(const EstimatorSpec& spec, const MixedFrequencyDataset& ds,
                                int h_m, double split, RandomSeed seed,
                                const std::vector<double>* oracle_mean = nullptr);

// Exhaustive (U-)MIDAS specification search on tuning replications: lag
// counts from `min_lags` to `max_lags`, all covariate pairs, both weighting
// families; scored by mean validation MSE of the restricted MIDAS.
MidasModelSpec search_midas_spec(const DgpConfig& dgp, int h_m, int tuning_reps, double split,
                                 RandomSeed seed, int min_lags = 2, int max_lags = 12);

struct McExperiment {
    DgpConfig dgp;
    std::vector<int> horizons = {1};
    std::vector<EstimatorSpec> roster;
    int replications = 50;
    int estimations_per_rep = 2;
    double split = 0.6;
    int tuning_reps = 20;
    std::string dm_benchmark = "MIDAS";
    RandomSeed seed;
    int jobs = 1;
};

struct McResultRow {
    std::string estimator;
    int h_m = 0;
    int T = 0;
    double mean_rmsfe = 0.0;
    double sd_rmsfe = 0.0;
    int n_fail = 0;
    double dm_stat = 0.0;  // NaN when not comparable
    double dm_p = 0.0;
};

struct McTable {
    std::vector<McResultRow> rows;
    std::vector<std::string> notes;

    const McResultRow& row(const std::string& estimator, int h_m) const;
};

// Full Monte Carlo protocol: per replication draw a dataset, run every
// estimator's rolling forecast (LSTMs re-estimated `estimations_per_rep`
// times with distinct seeds), average RMSFE per replication, and test each
// estimator against the benchmark with DM on per-origin loss differentials
// averaged across replications.
McTable run_monte_carlo(const McExperiment& exp);

// Low-frequency horizon implied by a high-frequency one.
inline int low_frequency_horizon(int h_m, int m) { return std::max(1, (h_m + m - 1) / m); }

}  // namespace mfcast
