#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mfcast/alignment.hpp"
#include "mfcast/almon.hpp"
#include "mfcast/rng.hpp"

namespace mfcast {

// One covariate's restricted-MIDAS estimate: slope, Almon parameters and the
// implied per-lag coefficients b_j = beta * w_j(theta).
struct MidasCovariateFit {
    std::string id;
    double beta = 0.0;
    AlmonTheta theta;
    Weighting weighting = Weighting::NormalizedAlmon;
    Eigen::VectorXd midas_coef;
};

struct MidasFit {
    double alpha = 0.0;
    std::vector<MidasCovariateFit> covariates;
    double rss = 0.0;
    double sigma2 = 0.0;
    int n_obs = 0;
    std::vector<AlignedColumn> columns;
    std::vector<AlignedBlock> blocks;
    int multistart_winner = -1;
};

struct UMidasFit {
    double alpha = 0.0;
    Eigen::VectorXd coef;
    double rss = 0.0;
    double sigma2 = 0.0;
    int n_obs = 0;
    std::vector<AlignedColumn> columns;
};

struct Ar1Fit {
    double intercept = 0.0;
    double slope = 0.0;
    double sigma2 = 0.0;
    int horizon = 1;
};

// Restricted MIDAS regression estimated by nonlinear least squares: damped
// trust-region steps on the profiled objective (theta outer, exact linear
// solve for alpha/beta inner), multistart over a fixed theta grid plus seeded
// jitter. Deterministic given (data, weightings, seed).
MidasFit midas_fit(const AlignedDesign& ad, const std::vector<Weighting>& weighting,
                   RandomSeed seed);

// Unrestricted MIDAS by OLS via a rank-revealing orthogonal decomposition.
UMidasFit umidas_fit(const AlignedDesign& ad);

// OLS of y_t on y_{t-h} plus intercept.
Ar1Fit ar1_fit(const std::vector<double>& y, int horizon = 1);

// Evaluate a fit on aligned rows; invalid rows yield NaN. Column layout must
// match the fit.
Eigen::VectorXd predict(const MidasFit& fit, const AlignedDesign& ad);
Eigen::VectorXd predict(const UMidasFit& fit, const AlignedDesign& ad);
double predict(const Ar1Fit& fit, double y_lagged);

// RSS of the restricted model evaluated at given parameters (used by tests
// and by the multistart machinery).
double midas_rss(const AlignedDesign& ad, double alpha, const std::vector<MidasCovariateFit>& covs);

}  // namespace mfcast
