#include "mfcast/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace mfcast {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double rmsfe(const std::vector<double>& errors) {
    if (errors.empty()) throw DomainError("rmsfe: no records");
    double ss = 0.0;
    for (double e : errors) ss += e * e;
    return std::sqrt(ss / errors.size());
}

double rmsfe(const std::vector<ForecastRecord>& records) {
    std::vector<double> errors;
    errors.reserve(records.size());
    for (const auto& r : records) errors.push_back(r.error());
    return rmsfe(errors);
}

double relative_mse(const std::vector<ForecastRecord>& records,
                    const std::vector<double>& y_eval) {
    if (records.empty()) throw DomainError("relative_mse: no records");
    if (y_eval.empty()) throw DomainError("relative_mse: empty evaluation window");
    double mean = 0.0;
    for (double y : y_eval) mean += y;
    mean /= y_eval.size();
    double var = 0.0;
    for (double y : y_eval) var += (y - mean) * (y - mean);
    var /= y_eval.size();  // population form
    if (var <= 0.0) throw DomainError("relative_mse: zero variance in evaluation window");
    double mse = 0.0;
    for (const auto& r : records) mse += r.error() * r.error();
    mse /= records.size();
    return mse / var;
}

DmResult dm_test(const std::vector<double>& errors_a, const std::vector<double>& errors_b,
                 int h) {
    if (errors_a.size() != errors_b.size()) throw ShapeError("dm_test: length mismatch");
    const int n = static_cast<int>(errors_a.size());
    if (n < 5) throw DomainError("dm_test: need at least 5 forecasts");
    if (h < 1) throw DomainError("dm_test: horizon must be >= 1");

    std::vector<double> d(n);
    bool all_zero = true;
    for (int t = 0; t < n; ++t) {
        d[t] = errors_a[t] * errors_a[t] - errors_b[t] * errors_b[t];
        if (d[t] != 0.0) all_zero = false;
    }
    if (all_zero) throw DegenerateComparisonError("dm_test: loss differential identically zero");

    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= n;

    auto gamma = [&](int lag) {
        double acc = 0.0;
        for (int t = lag; t < n; ++t) acc += (d[t] - mean) * (d[t - lag] - mean);
        return acc / n;
    };

    double lrv = gamma(0);
    DmResult result;
    if (h > 1) {
        double v = lrv;
        for (int lag = 1; lag <= h - 1 && lag < n; ++lag) v += 2.0 * gamma(lag);
        if (v <= 0.0) {
            result.variance_fallback = true;  // rectangular window went negative
        } else {
            lrv = v;
        }
    }
    if (lrv <= 0.0) throw DegenerateComparisonError("dm_test: zero long-run variance");

    result.statistic = mean / std::sqrt(lrv / n);
    result.p_value = 2.0 * (1.0 - normal_cdf(std::abs(result.statistic)));
    if (result.p_value <= 0.0) result.p_value = std::numeric_limits<double>::min();
    return result;
}

std::vector<double> cumsfe(const std::vector<double>& errors_bench,
                           const std::vector<double>& errors_model) {
    if (errors_bench.size() != errors_model.size()) throw ShapeError("cumsfe: length mismatch");
    std::vector<double> out(errors_bench.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < errors_bench.size(); ++t) {
        acc += errors_bench[t] * errors_bench[t] - errors_model[t] * errors_model[t];
        out[t] = acc;
    }
    return out;
}

double annualize(const std::vector<double>& quarterly_actuals,
                 const std::vector<double>& quarterly_forecasts,
                 const std::vector<double>& base_year_levels) {
    if (quarterly_actuals.size() + quarterly_forecasts.size() != 4)
        throw ShapeError("annualize: need exactly 4 quarterly growth values");
    if (base_year_levels.size() != 4) throw ShapeError("annualize: need 4 base-year levels");
    for (double l : base_year_levels)
        if (!(l > 0.0)) throw DomainError("annualize: non-positive base level");

    std::vector<double> growth = quarterly_actuals;
    growth.insert(growth.end(), quarterly_forecasts.begin(), quarterly_forecasts.end());

    double level = base_year_levels.back();
    double sum_current = 0.0;
    for (double g : growth) {
        level *= 1.0 + g / 100.0;
        sum_current += level;
    }
    double sum_base = 0.0;
    for (double l : base_year_levels) sum_base += l;
    return 100.0 * (sum_current / sum_base - 1.0);
}

std::string horizon_group_label(int h_m, int m) {
    if (h_m <= m) return "nowcast";
    if (h_m <= 2 * m) return "mid";
    return "long";
}

EvaluationReport evaluate_models(
    const std::vector<std::pair<std::string, std::vector<ForecastRecord>>>& records,
    const std::vector<std::string>& benchmarks) {
    EvaluationReport report;

    // Group records by (model, horizon).
    std::map<std::pair<std::string, int>, std::vector<ForecastRecord>> grouped;
    for (const auto& [model, recs] : records)
        for (const auto& r : recs) grouped[{model, r.h_m}].push_back(r);

    auto errors_of = [&grouped](const std::string& model, int h_m) {
        std::vector<double> errors;
        auto it = grouped.find({model, h_m});
        if (it == grouped.end()) return errors;
        for (const auto& r : it->second) errors.push_back(r.error());
        return errors;
    };

    for (const auto& [key, recs] : grouped) {
        const auto& [model, h_m] = key;
        ModelHorizonReport row;
        row.model = model;
        row.h_m = h_m;
        row.horizon_group = horizon_group_label(h_m, 3);
        row.n_forecasts = static_cast<int>(recs.size());
        row.rmsfe = rmsfe(recs);
        std::vector<double> actuals;
        for (const auto& r : recs) actuals.push_back(r.actual);
        try {
            row.rel_mse = relative_mse(recs, actuals);
        } catch (const DomainError&) {
            row.rel_mse = kNaN;
        }

        const int h = std::max(1, (h_m + 2) / 3);  // low-frequency horizon
        for (const auto& bench : benchmarks) {
            row.benchmark.push_back(bench);
            const std::vector<double> be = errors_of(bench, h_m);
            std::vector<double> me;
            for (const auto& r : recs) me.push_back(r.error());
            if (be.size() != me.size() || be.empty()) {
                row.rel_rmsfe.push_back(kNaN);
                row.dm_stat.push_back(kNaN);
                row.dm_p.push_back(kNaN);
                continue;
            }
            const double bench_rmsfe = rmsfe(be);
            row.rel_rmsfe.push_back(bench_rmsfe > 0.0 ? row.rmsfe / bench_rmsfe
                                                      : (row.rmsfe == 0.0 ? 1.0 : kNaN));
            if (model == bench) {
                row.dm_stat.push_back(0.0);
                row.dm_p.push_back(1.0);
                continue;
            }
            try {
                const DmResult dm = dm_test(me, be, h);
                row.dm_stat.push_back(dm.statistic);
                row.dm_p.push_back(dm.p_value);
            } catch (const Error&) {
                row.dm_stat.push_back(kNaN);
                row.dm_p.push_back(kNaN);
            }
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace mfcast
