#pragma once

#include <Eigen/Dense>

#include "mfcast/errors.hpp"

namespace mfcast {

// Parameters of the second-order exponential Almon lag polynomial.
struct AlmonTheta {
    double theta1 = 0.0;
    double theta2 = 0.0;
};

enum class Weighting {
    NormalizedAlmon,     // weights sum to one
    AlmonNonNormalized,  // raw exp(theta1*i + theta2*i^2)
};

// Weight vector over positions i = 1..J (position 1 maps to the lag spec's
// smallest lag). Normalized weights use a max-exponent guard, so they are
// finite for any theta; non-normalized weights throw NumericalError on
// overflow.
Eigen::VectorXd almon_weights(AlmonTheta theta, int J, bool normalized);

inline Eigen::VectorXd almon_weights(AlmonTheta theta, int J, Weighting w) {
    return almon_weights(theta, J, w == Weighting::NormalizedAlmon);
}

// J x 2 matrix of dw_i/dtheta1, dw_i/dtheta2.
Eigen::MatrixXd almon_weight_jacobian(AlmonTheta theta, int J, bool normalized);

}  // namespace mfcast
