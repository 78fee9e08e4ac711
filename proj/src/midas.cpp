#include "mfcast/midas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfcast {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ProfiledEval {
    double rss = kInf;
    double alpha = 0.0;
    Eigen::VectorXd beta;       // per covariate
    Eigen::VectorXd residual;   // n
    std::vector<Eigen::VectorXd> weights;
    bool singular = false;
};

// Given theta, aggregate each block with its Almon weights and solve the
// inner linear least squares for (alpha, beta).
ProfiledEval profile_eval(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const std::vector<AlignedBlock>& blocks,
                          const std::vector<Weighting>& weighting,
                          const std::vector<AlmonTheta>& theta) {
    const int n = static_cast<int>(X.rows());
    const int k = static_cast<int>(blocks.size());
    ProfiledEval ev;
    ev.weights.resize(k);

    Eigen::MatrixXd design(n, k + 1);
    design.col(0).setOnes();
    for (int b = 0; b < k; ++b) {
        ev.weights[b] = almon_weights(theta[b], blocks[b].width, weighting[b]);
        design.col(b + 1) =
            X.middleCols(blocks[b].first_col, blocks[b].width) * ev.weights[b];
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < k + 1) {
        ev.singular = true;
        return ev;
    }
    Eigen::VectorXd coef = qr.solve(y);
    ev.alpha = coef[0];
    ev.beta = coef.tail(k);
    ev.residual = y - design * coef;
    ev.rss = ev.residual.squaredNorm();
    return ev;
}

struct LmOutcome {
    bool ok = false;
    bool singular = false;
    std::vector<AlmonTheta> theta;
    ProfiledEval eval;
};

// Damped trust-region least squares on the profiled objective. The Jacobian
// holds (alpha, beta) fixed at the inner optimum (variable-projection step).
LmOutcome levenberg_marquardt(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const std::vector<AlignedBlock>& blocks,
                              const std::vector<Weighting>& weighting,
                              std::vector<AlmonTheta> theta) {
    constexpr int kMaxIter = 200;
    constexpr double kRelTol = 1e-10;
    const int k = static_cast<int>(blocks.size());
    const int n = static_cast<int>(X.rows());

    LmOutcome out;
    ProfiledEval cur;
    try {
        cur = profile_eval(X, y, blocks, weighting, theta);
    } catch (const NumericalError&) {
        return out;
    }
    if (cur.singular) {
        out.singular = true;
        return out;
    }

    double lambda = 1e-3;
    for (int iter = 0; iter < kMaxIter; ++iter) {
        Eigen::MatrixXd jac(n, 2 * k);
        for (int b = 0; b < k; ++b) {
            const Eigen::MatrixXd dw =
                almon_weight_jacobian(theta[b], blocks[b].width,
                                      weighting[b] == Weighting::NormalizedAlmon);
            jac.middleCols(2 * b, 2) =
                -cur.beta[b] * (X.middleCols(blocks[b].first_col, blocks[b].width) * dw);
        }
        const Eigen::VectorXd grad = jac.transpose() * cur.residual;
        if (grad.lpNorm<Eigen::Infinity>() < 1e-12 * std::max(1.0, cur.rss)) break;

        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        bool accepted = false;
        for (int attempt = 0; attempt < 25 && !accepted; ++attempt) {
            Eigen::MatrixXd damped = jtj;
            for (int d = 0; d < damped.rows(); ++d)
                damped(d, d) += lambda * std::max(jtj(d, d), 1e-12);
            const Eigen::VectorXd step = damped.ldlt().solve(-grad);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            std::vector<AlmonTheta> cand = theta;
            for (int b = 0; b < k; ++b) {
                cand[b].theta1 += step[2 * b];
                cand[b].theta2 += step[2 * b + 1];
            }
            ProfiledEval trial;
            double trial_rss = kInf;
            try {
                trial = profile_eval(X, y, blocks, weighting, cand);
                if (!trial.singular) trial_rss = trial.rss;
            } catch (const NumericalError&) {
            }
            if (trial_rss < cur.rss) {
                const double rel = (cur.rss - trial_rss) / std::max(cur.rss, 1e-300);
                theta = std::move(cand);
                cur = std::move(trial);
                lambda = std::max(lambda * 0.1, 1e-12);
                accepted = true;
                if (rel < kRelTol) {
                    out.ok = true;
                    out.theta = theta;
                    out.eval = cur;
                    return out;
                }
            } else {
                lambda *= 10.0;
            }
        }
        if (!accepted) break;  // local minimum within damping range
    }

    out.ok = std::isfinite(cur.rss);
    out.theta = theta;
    out.eval = cur;
    return out;
}

bool theta_less(const std::vector<AlmonTheta>& a, const std::vector<AlmonTheta>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].theta1 != b[i].theta1) return a[i].theta1 < b[i].theta1;
        if (a[i].theta2 != b[i].theta2) return a[i].theta2 < b[i].theta2;
    }
    return false;
}

}  // namespace

MidasFit midas_fit(const AlignedDesign& ad, const std::vector<Weighting>& weighting,
                   RandomSeed seed) {
    for (const auto& b : ad.blocks)
        if (b.is_ar) throw DomainError("midas_fit: autoregressive blocks are not supported");

    const int k = static_cast<int>(ad.blocks.size());
    if (k == 0) throw DomainError("midas_fit: no covariate blocks");

    std::vector<Weighting> w = weighting;
    if (w.size() == 1 && k > 1) w.assign(k, weighting[0]);
    if (static_cast<int>(w.size()) != k)
        throw ShapeError("midas_fit: one weighting per covariate block required");

    const Eigen::MatrixXd X = ad.valid_X();
    const Eigen::VectorXd y = ad.valid_y();
    const int n = static_cast<int>(X.rows());
    if (n < 1 + 3 * k)
        throw DomainError("midas_fit: need at least " + std::to_string(1 + 3 * k) +
                          " valid rows, got " + std::to_string(n));

    // Fixed multistart grid plus seeded jitter.
    static constexpr double kGrid1[] = {-1.0, 0.0, 0.7};
    static constexpr double kGrid2[] = {-0.5, -0.1, -0.01};
    std::vector<std::vector<AlmonTheta>> starts;
    for (double t1 : kGrid1)
        for (double t2 : kGrid2) starts.push_back(std::vector<AlmonTheta>(k, AlmonTheta{t1, t2}));
    Rng rng = substream(seed, "midas-multistart");
    for (int j = 0; j < 3; ++j) {
        std::vector<AlmonTheta> s(k);
        for (auto& th : s) {
            th.theta1 = rng.uniform(-1.2, 0.9);
            th.theta2 = rng.uniform(-0.6, -0.005);
        }
        starts.push_back(std::move(s));
    }

    LmOutcome best;
    int best_index = -1;
    int n_singular = 0;
    for (std::size_t s = 0; s < starts.size(); ++s) {
        LmOutcome run = levenberg_marquardt(X, y, ad.blocks, w, starts[s]);
        if (run.singular) ++n_singular;
        if (!run.ok) continue;
        if (best_index < 0 || run.eval.rss < best.eval.rss ||
            (run.eval.rss == best.eval.rss && theta_less(run.theta, best.theta))) {
            best = std::move(run);
            best_index = static_cast<int>(s);
        }
    }
    if (best_index < 0) {
        if (n_singular == static_cast<int>(starts.size()))
            throw SingularDesignError("midas_fit: inner linear system singular at every start");
        throw ConvergenceError("midas_fit: no multistart converged");
    }

    MidasFit fit;
    fit.alpha = best.eval.alpha;
    fit.rss = best.eval.rss;
    fit.n_obs = n;
    const int p = 1 + 3 * k;
    fit.sigma2 = best.eval.rss / std::max(1, n - p);
    fit.columns = ad.columns;
    fit.blocks = ad.blocks;
    fit.multistart_winner = best_index;
    for (int b = 0; b < k; ++b) {
        MidasCovariateFit cov;
        cov.id = ad.blocks[b].series_id;
        cov.beta = best.eval.beta[b];
        cov.theta = best.theta[b];
        cov.weighting = w[b];
        cov.midas_coef = cov.beta * best.eval.weights[b];
        fit.covariates.push_back(std::move(cov));
    }
    return fit;
}

UMidasFit umidas_fit(const AlignedDesign& ad) {
    const Eigen::MatrixXd X = ad.valid_X();
    const Eigen::VectorXd y = ad.valid_y();
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    if (n <= p + 1)
        throw DomainError("umidas_fit: need more than " + std::to_string(p + 1) +
                          " valid rows, got " + std::to_string(n));

    Eigen::MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = X;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < p + 1) {
        const auto& perm = qr.colsPermutation().indices();
        std::string names;
        for (int i = qr.rank(); i < p + 1; ++i) {
            const int col = perm[i];
            if (!names.empty()) names += ", ";
            if (col == 0) {
                names += "intercept";
            } else {
                const auto& c = ad.columns[col - 1];
                names += c.series_id + "(lag " + std::to_string(c.lag) + ")";
            }
        }
        throw SingularDesignError("umidas_fit: rank-deficient design; dependent columns: " + names);
    }

    Eigen::VectorXd coef = qr.solve(y);
    UMidasFit fit;
    fit.alpha = coef[0];
    fit.coef = coef.tail(p);
    fit.rss = (y - design * coef).squaredNorm();
    fit.n_obs = n;
    fit.sigma2 = fit.rss / std::max(1, n - p - 1);
    fit.columns = ad.columns;
    return fit;
}

Ar1Fit ar1_fit(const std::vector<double>& y, int horizon) {
    if (horizon < 1) throw DomainError("ar1_fit: horizon must be >= 1");
    const int n = static_cast<int>(y.size());
    if (n < 3) throw DomainError("ar1_fit: need at least 3 observations");
    if (n - horizon < 2) throw DomainError("ar1_fit: series too short for horizon");

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int m = n - horizon;
    for (int t = horizon; t < n; ++t) {
        const double xl = y[t - horizon], yt = y[t];
        sx += xl;
        sy += yt;
        sxx += xl * xl;
        sxy += xl * yt;
    }
    const double denom = sxx - sx * sx / m;
    Ar1Fit fit;
    fit.horizon = horizon;
    if (std::abs(denom) < 1e-12 * std::max(1.0, sxx)) {
        fit.slope = 0.0;  // constant regressor
        fit.intercept = sy / m;
    } else {
        fit.slope = (sxy - sx * sy / m) / denom;
        fit.intercept = (sy - fit.slope * sx) / m;
    }
    double rss = 0;
    for (int t = horizon; t < n; ++t) {
        const double e = y[t] - fit.intercept - fit.slope * y[t - horizon];
        rss += e * e;
    }
    fit.sigma2 = rss / std::max(1, m - 2);
    return fit;
}

namespace {

void check_columns(const std::vector<AlignedColumn>& fit_cols, const AlignedDesign& ad,
                   const char* who) {
    if (fit_cols.size() != ad.columns.size())
        throw ShapeError(std::string(who) + ": column count mismatch");
    for (std::size_t i = 0; i < fit_cols.size(); ++i)
        if (!(fit_cols[i] == ad.columns[i]))
            throw ShapeError(std::string(who) + ": column layout mismatch at position " +
                             std::to_string(i));
}

}  // namespace

Eigen::VectorXd predict(const MidasFit& fit, const AlignedDesign& ad) {
    check_columns(fit.columns, ad, "predict(midas)");
    Eigen::VectorXd out = Eigen::VectorXd::Constant(ad.rows(), std::numeric_limits<double>::quiet_NaN());
    for (int r = 0; r < ad.rows(); ++r) {
        if (!ad.valid[r]) continue;
        double v = fit.alpha;
        for (std::size_t b = 0; b < fit.blocks.size(); ++b)
            v += ad.X.row(r)
                     .segment(fit.blocks[b].first_col, fit.blocks[b].width)
                     .dot(fit.covariates[b].midas_coef);
        out[r] = v;
    }
    return out;
}

Eigen::VectorXd predict(const UMidasFit& fit, const AlignedDesign& ad) {
    check_columns(fit.columns, ad, "predict(umidas)");
    Eigen::VectorXd out = Eigen::VectorXd::Constant(ad.rows(), std::numeric_limits<double>::quiet_NaN());
    for (int r = 0; r < ad.rows(); ++r) {
        if (!ad.valid[r]) continue;
        out[r] = fit.alpha + ad.X.row(r).dot(fit.coef);
    }
    return out;
}

double predict(const Ar1Fit& fit, double y_lagged) {
    return fit.intercept + fit.slope * y_lagged;
}

double midas_rss(const AlignedDesign& ad, double alpha,
                 const std::vector<MidasCovariateFit>& covs) {
    if (covs.size() != ad.blocks.size()) throw ShapeError("midas_rss: block count mismatch");
    const Eigen::MatrixXd X = ad.valid_X();
    const Eigen::VectorXd y = ad.valid_y();
    double rss = 0;
    for (int r = 0; r < X.rows(); ++r) {
        double v = alpha;
        for (std::size_t b = 0; b < covs.size(); ++b) {
            const Eigen::VectorXd w =
                almon_weights(covs[b].theta, ad.blocks[b].width, covs[b].weighting);
            v += covs[b].beta *
                 X.row(r).segment(ad.blocks[b].first_col, ad.blocks[b].width).dot(w);
        }
        const double e = y[r] - v;
        rss += e * e;
    }
    return rss;
}

}  // namespace mfcast
