#include "mfcast/alignment.hpp"

#include <cmath>
#include <limits>

namespace mfcast {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

int AlignedDesign::n_valid() const {
    int n = 0;
    for (char v : valid) n += (v != 0);
    return n;
}

Eigen::MatrixXd AlignedDesign::valid_X(int t_max) const {
    const int n = rows();
    Eigen::MatrixXd out(n, cols());
    int r = 0;
    for (int i = 0; i < n; ++i) {
        if (!valid[i]) continue;
        if (t_max >= 0 && period[i] > t_max) continue;
        out.row(r++) = X.row(i);
    }
    out.conservativeResize(r, Eigen::NoChange);
    return out;
}

Eigen::VectorXd AlignedDesign::valid_y(int t_max) const {
    Eigen::VectorXd out(rows());
    int r = 0;
    for (int i = 0; i < rows(); ++i) {
        if (!valid[i]) continue;
        if (t_max >= 0 && period[i] > t_max) continue;
        out[r++] = y[i];
    }
    out.conservativeResize(r);
    return out;
}

std::vector<int> AlignedDesign::valid_periods(int t_max) const {
    std::vector<int> out;
    for (int i = 0; i < rows(); ++i) {
        if (!valid[i]) continue;
        if (t_max >= 0 && period[i] > t_max) continue;
        out.push_back(period[i]);
    }
    return out;
}

int AlignedDesign::row_of_period(int t) const {
    for (int i = 0; i < rows(); ++i)
        if (period[i] == t) return i;
    return -1;
}

AlignedDesign frequency_align(const MixedFrequencyDataset& ds, const AlignmentSpec& spec) {
    const ValidationReport report = validate_dataset(ds);
    if (!report.ok()) throw AlignmentError("frequency_align: invalid dataset\n" + report.str());

    AlignedDesign ad;
    const int n = ds.periods();

    int p = 0;
    for (const auto& cov : spec.covariates) {
        if (!cov.lags.valid()) throw AlignmentError("frequency_align: bad lag spec for '" + cov.id + "'");
        if (cov.horizon < 0) throw AlignmentError("frequency_align: negative horizon for '" + cov.id + "'");
        const Series& s = ds.covariate(cov.id);
        AlignedBlock block{cov.id, p, cov.lags.width(), cov.lags.j_min, s.ratio, cov.horizon, false};
        ad.blocks.push_back(block);
        for (int j = cov.lags.j_min; j <= cov.lags.j_max; ++j)
            ad.columns.push_back({cov.id, j, false});
        p += cov.lags.width();
    }
    if (spec.ar) {
        if (!spec.ar->lags.valid()) throw AlignmentError("frequency_align: bad AR lag spec");
        ad.blocks.push_back({ds.target.id, p, spec.ar->lags.width(), spec.ar->lags.j_min, 1,
                             spec.ar->horizon, true});
        for (int j = spec.ar->lags.j_min; j <= spec.ar->lags.j_max; ++j)
            ad.columns.push_back({ds.target.id, j, true});
        p += spec.ar->lags.width();
    }
    if (p == 0) throw AlignmentError("frequency_align: empty specification");

    ad.X = Eigen::MatrixXd::Constant(n, p, kNaN);
    ad.y.resize(n);
    ad.valid.assign(n, 1);
    ad.period.resize(n);

    for (int t = 1; t <= n; ++t) {
        const int row = t - 1;
        ad.period[row] = t;
        ad.y[row] = ds.target.at(t);
        bool row_ok = !ds.target.is_missing(t);

        int col = 0;
        for (const auto& cov : spec.covariates) {
            const Series& s = ds.covariate(cov.id);
            for (int j = cov.lags.j_min; j <= cov.lags.j_max; ++j, ++col) {
                const int idx = s.ratio * t - cov.horizon - j;
                if (idx < 1 || s.is_missing(idx)) {
                    row_ok = false;
                } else {
                    ad.X(row, col) = s.at(idx);
                }
            }
        }
        if (spec.ar) {
            for (int j = spec.ar->lags.j_min; j <= spec.ar->lags.j_max; ++j, ++col) {
                const int idx = t - spec.ar->horizon - j;
                if (idx < 1 || ds.target.is_missing(idx)) {
                    row_ok = false;
                } else {
                    ad.X(row, col) = ds.target.at(idx);
                }
            }
        }
        if (!row_ok) {
            ad.valid[row] = 0;
            ad.X.row(row).setConstant(kNaN);
        }
    }

    if (ad.n_valid() == 0) throw AlignmentError("frequency_align: no feasible rows");
    return ad;
}

TensorBatch sample_align(const MixedFrequencyDataset& ds, int timesteps, int horizon,
                         int within_rate) {
    const ValidationReport report = validate_dataset(ds);
    if (!report.ok()) throw AlignmentError("sample_align: invalid dataset\n" + report.str());
    if (timesteps < 1) throw AlignmentError("sample_align: timesteps must be >= 1");
    if (within_rate < 1) throw AlignmentError("sample_align: within_rate must be >= 1");
    if (ds.covariates.empty()) throw AlignmentError("sample_align: dataset has no covariates");

    const int m = ds.covariates.front().ratio;
    for (const auto& s : ds.covariates) {
        if (s.ratio != m)
            throw MultipleMismatchError(
                "sample_align: covariates have multiple mismatch ratios; use frequency_align");
    }

    TensorBatch batch;
    const int k = static_cast<int>(ds.covariates.size());
    for (int t = 1; t <= ds.periods(); ++t) {
        const int end = m * t - horizon;
        const int start = end - (timesteps - 1) * within_rate;
        if (start < 1 || end > ds.covariates.front().length()) continue;
        if (ds.target.is_missing(t)) continue;
        Eigen::MatrixXd seq(timesteps, k);
        bool ok = true;
        for (int step = 0; step < timesteps && ok; ++step) {
            const int idx = start + step * within_rate;
            for (int c = 0; c < k; ++c) {
                if (ds.covariates[c].is_missing(idx)) {
                    ok = false;
                    break;
                }
                seq(step, c) = ds.covariates[c].at(idx);
            }
        }
        if (!ok) continue;
        batch.sequences.push_back(std::move(seq));
        batch.targets.push_back(ds.target.at(t));
        batch.target_period.push_back(t);
    }
    if (batch.sequences.empty()) throw AlignmentError("sample_align: no feasible sequences");
    return batch;
}

TensorBatch design_to_tensor(const AlignedDesign& ad, int timesteps) {
    if (timesteps < 1) throw AlignmentError("design_to_tensor: timesteps must be >= 1");

    TensorBatch batch;
    const int n = ad.rows();
    for (int row = timesteps - 1; row < n; ++row) {
        bool ok = true;
        for (int s = 0; s < timesteps; ++s) {
            const int r = row - timesteps + 1 + s;
            if (!ad.valid[r] || ad.period[r] != ad.period[row] - timesteps + 1 + s) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        Eigen::MatrixXd seq(timesteps, ad.cols());
        for (int s = 0; s < timesteps; ++s) seq.row(s) = ad.X.row(row - timesteps + 1 + s);
        batch.sequences.push_back(std::move(seq));
        batch.targets.push_back(ad.y[row]);
        batch.target_period.push_back(ad.period[row]);
    }
    if (batch.sequences.empty()) throw AlignmentError("design_to_tensor: too few valid rows");
    return batch;
}

}  // namespace mfcast
