#include "mfcast/almon.hpp"

#include <cmath>

namespace mfcast {

Eigen::VectorXd almon_weights(AlmonTheta theta, int J, bool normalized) {
    if (J < 1) throw DomainError("almon_weights: J must be >= 1");
    Eigen::VectorXd expo(J);
    for (int i = 1; i <= J; ++i)
        expo[i - 1] = theta.theta1 * i + theta.theta2 * static_cast<double>(i) * i;

    if (!normalized) {
        Eigen::VectorXd w = expo.array().exp();
        if (!w.allFinite())
            throw NumericalError("almon_weights: non-normalized weights overflow");
        return w;
    }

    const double guard = expo.maxCoeff();
    Eigen::VectorXd w = (expo.array() - guard).exp();
    const double denom = w.sum();
    if (!std::isfinite(denom) || denom <= 0.0)
        throw NumericalError("almon_weights: degenerate normalization");
    w /= denom;
    if (!w.allFinite()) throw NumericalError("almon_weights: overflow after guard");
    return w;
}

Eigen::MatrixXd almon_weight_jacobian(AlmonTheta theta, int J, bool normalized) {
    const Eigen::VectorXd w = almon_weights(theta, J, normalized);
    Eigen::VectorXd pos(J), pos2(J);
    for (int i = 1; i <= J; ++i) {
        pos[i - 1] = i;
        pos2[i - 1] = static_cast<double>(i) * i;
    }
    Eigen::MatrixXd jac(J, 2);
    if (!normalized) {
        jac.col(0) = w.cwiseProduct(pos);
        jac.col(1) = w.cwiseProduct(pos2);
        return jac;
    }
    const double mu1 = w.dot(pos);
    const double mu2 = w.dot(pos2);
    jac.col(0) = w.array() * (pos.array() - mu1);
    jac.col(1) = w.array() * (pos2.array() - mu2);
    return jac;
}

}  // namespace mfcast
