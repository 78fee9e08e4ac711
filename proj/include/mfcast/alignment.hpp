#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "mfcast/series.hpp"

namespace mfcast {

// High-frequency lag range in the variable's own frequency units.
struct LagSpec {
    int j_min = 0;
    int j_max = 0;

    int width() const { return j_max - j_min + 1; }
    bool valid() const { return j_min >= 0 && j_max >= j_min; }
};

// Per-covariate alignment request: which lags to take and the forecasting
// horizon expressed in the covariate's own frequency units. The latest usable
// observation for low-frequency target t is index ratio*t - horizon.
struct CovariateAlignSpec {
    std::string id;
    LagSpec lags;
    int horizon = 0;  // h_m in the covariate's own units
};

// Optional autoregressive block on the target: lags of y at low-frequency
// horizon h, i.e. column j holds y[t - horizon - j].
struct ArAlignSpec {
    LagSpec lags;
    int horizon = 1;
};

struct AlignmentSpec {
    std::vector<CovariateAlignSpec> covariates;
    std::optional<ArAlignSpec> ar;
};

// Identifies one aligned column: (series, lag) plus whether it belongs to the
// autoregressive block.
struct AlignedColumn {
    std::string series_id;
    int lag = 0;
    bool is_ar = false;

    bool operator==(const AlignedColumn&) const = default;
};

// Contiguous column range belonging to one source series.
struct AlignedBlock {
    std::string series_id;
    int first_col = 0;
    int width = 0;
    int lag_min = 0;
    int ratio = 1;
    int horizon = 0;
    bool is_ar = false;
};

// Low-frequency design matrix produced by frequency alignment. Rows follow
// the target index t = 1..n; rows whose required source indices fall before
// the sample start are flagged invalid and hold NaN.
struct AlignedDesign {
    Eigen::MatrixXd X;           // n x p, NaN on invalid rows
    Eigen::VectorXd y;           // n
    std::vector<char> valid;     // n
    std::vector<int> period;     // 1-based low-frequency t per row
    std::vector<AlignedColumn> columns;
    std::vector<AlignedBlock> blocks;

    int rows() const { return static_cast<int>(X.rows()); }
    int cols() const { return static_cast<int>(X.cols()); }
    int n_valid() const;

    // Compacted copies over valid rows only (optionally restricted to rows
    // with period <= t_max).
    Eigen::MatrixXd valid_X(int t_max = -1) const;
    Eigen::VectorXd valid_y(int t_max = -1) const;
    std::vector<int> valid_periods(int t_max = -1) const;

    int row_of_period(int t) const;  // -1 when out of range
};

// Batch of fixed-length sequences for sequence-to-one models:
// sequences[s] is timesteps x features, oldest timestep first.
struct TensorBatch {
    std::vector<Eigen::MatrixXd> sequences;
    std::vector<double> targets;
    std::vector<int> target_period;

    int size() const { return static_cast<int>(sequences.size()); }
    int timesteps() const { return sequences.empty() ? 0 : static_cast<int>(sequences[0].rows()); }
    int features() const { return sequences.empty() ? 0 : static_cast<int>(sequences[0].cols()); }
};

// U-MIDAS frequency alignment: entry for (t, covariate k, lag j) holds
// x_k[ratio_k*t - horizon_k - j]; AR columns hold y[t - h - j]. Rows needing
// an index before the sample start are invalid. Column order: covariates in
// dataset order with ascending lags, AR block last.
AlignedDesign frequency_align(const MixedFrequencyDataset& ds, const AlignmentSpec& spec);

// Sampling alignment for single-mismatch data: one sequence per feasible
// target t, ending at high-frequency index m*t - horizon and stepping back
// `within_rate` indices per timestep (Fig-1b-style consecutive steps by
// default, inter-sequence shift m).
TensorBatch sample_align(const MixedFrequencyDataset& ds, int timesteps, int horizon = 0,
                         int within_rate = 1);

// Stacks `timesteps` consecutive valid aligned rows into one sequence per
// feasible target.
TensorBatch design_to_tensor(const AlignedDesign& ad, int timesteps);

}  // namespace mfcast
