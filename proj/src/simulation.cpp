#include "mfcast/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace mfcast {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

void DgpConfig::validate() const {
    if (T < 20) throw DomainError("DgpConfig: T must be >= 20");
    if (m < 1) throw DomainError("DgpConfig: m must be >= 1");
    if (K < 1) throw DomainError("DgpConfig: K must be >= 1");
    if (J < 0 || J >= m * T) throw DomainError("DgpConfig: J must lie in [0, m*T)");
    if (noise_sd < 0.0) throw DomainError("DgpConfig: noise_sd must be >= 0");
    if (!beta.empty() && beta.size() != 1 && static_cast<int>(beta.size()) != K)
        throw DomainError("DgpConfig: beta must have size 1 or K");
    if (!theta.empty() && theta.size() != 1 && static_cast<int>(theta.size()) != K)
        throw DomainError("DgpConfig: theta must have size 1 or K");
}

std::vector<double> DgpConfig::beta_resolved() const {
    if (beta.empty()) return std::vector<double>(K, 1.0);
    if (beta.size() == 1) return std::vector<double>(K, beta[0]);
    return beta;
}

std::vector<AlmonTheta> DgpConfig::theta_resolved() const {
    if (theta.empty()) return std::vector<AlmonTheta>(K, AlmonTheta{0.7, -0.5});
    if (theta.size() == 1) return std::vector<AlmonTheta>(K, theta[0]);
    return theta;
}

DgpDraw gen_dgp_full(const DgpConfig& cfg) {
    cfg.validate();
    const std::vector<double> beta = cfg.beta_resolved();
    const std::vector<AlmonTheta> theta = cfg.theta_resolved();

    const int hf_len = cfg.m * cfg.T;
    const int presample = cfg.J;  // high-frequency history so every y_t is well defined

    DgpDraw draw;
    draw.dataset.target.id = "y";
    draw.dataset.target.ratio = 1;

    // Full covariate paths including presample; the visible series are the
    // last m*T observations.
    std::vector<std::vector<double>> full(cfg.K);
    for (int k = 0; k < cfg.K; ++k) {
        Rng rng = substream(cfg.seed, "dgp-x", static_cast<std::uint64_t>(k));
        auto& x = full[static_cast<std::size_t>(k)];
        x.resize(static_cast<std::size_t>(presample + hf_len));
        if (cfg.x_process == XProcess::IidNormal) {
            for (auto& v : x) v = rng.normal();
        } else {
            const double stat_sd = 1.0 / std::sqrt(1.0 - cfg.rho * cfg.rho);
            x[0] = stat_sd * rng.normal();
            for (std::size_t i = 1; i < x.size(); ++i) x[i] = cfg.rho * x[i - 1] + rng.normal();
        }
        Series s;
        s.id = "x" + std::to_string(k + 1);
        s.ratio = cfg.m;
        s.values.assign(x.end() - hf_len, x.end());
        draw.dataset.covariates.push_back(std::move(s));
    }

    std::vector<Eigen::VectorXd> weights(static_cast<std::size_t>(cfg.K));
    for (int k = 0; k < cfg.K; ++k)
        weights[static_cast<std::size_t>(k)] =
            almon_weights(theta[static_cast<std::size_t>(k)], cfg.J + 1, true);

    Rng noise = substream(cfg.seed, "dgp-eps");
    draw.dataset.target.values.resize(static_cast<std::size_t>(cfg.T));
    draw.conditional_mean.resize(static_cast<std::size_t>(cfg.T));
    for (int t = 1; t <= cfg.T; ++t) {
        double mean = cfg.alpha;
        for (int k = 0; k < cfg.K; ++k) {
            double acc = 0.0;
            for (int j = 0; j <= cfg.J; ++j) {
                // high-frequency index m*t - j; the presample shifts it by +J
                acc += weights[static_cast<std::size_t>(k)][j] *
                       full[static_cast<std::size_t>(k)]
                           [static_cast<std::size_t>(presample + cfg.m * t - j - 1)];
            }
            mean += beta[static_cast<std::size_t>(k)] * acc;
        }
        draw.conditional_mean[static_cast<std::size_t>(t - 1)] = mean;
        draw.dataset.target.values[static_cast<std::size_t>(t - 1)] =
            mean + cfg.noise_sd * noise.normal();
    }
    return draw;
}

MixedFrequencyDataset gen_dgp(const DgpConfig& cfg) { return gen_dgp_full(cfg).dataset; }

std::string MidasModelSpec::str() const {
    std::ostringstream os;
    os << "lags=" << lag_count << " vars=(";
    for (std::size_t i = 0; i < covariate_indices.size(); ++i)
        os << (i ? "," : "") << covariate_indices[i] + 1;
    os << ") weighting="
       << (weighting == Weighting::NormalizedAlmon ? "nealmon" : "almon-nonnorm");
    return os.str();
}

const HyperChoice& EstimatorSpec::hyper_for(int h_m) const {
    auto it = hyper_by_horizon.find(h_m);
    return it != hyper_by_horizon.end() ? it->second : hyper;
}

namespace {

AlignmentSpec fa_alignment_spec(const MixedFrequencyDataset& ds, const LagSpec& lags, int h_m,
                                const std::vector<int>* covariate_subset = nullptr) {
    AlignmentSpec spec;
    std::vector<int> all;
    if (!covariate_subset) {
        all.resize(ds.covariates.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
        covariate_subset = &all;
    }
    for (int idx : *covariate_subset) {
        const auto& s = ds.covariates[static_cast<std::size_t>(idx)];
        spec.covariates.push_back({s.id, lags, h_m});
    }
    return spec;
}

struct SplitSizes {
    int t1 = 0;
    int t2 = 0;
};

SplitSizes resolve_split(int T, double split) {
    SplitSizes s;
    s.t1 = static_cast<int>(std::lround(split * T));
    s.t1 = std::min(std::max(s.t1, 1), T - 1);
    s.t2 = T - s.t1;
    return s;
}

TensorBatch filter_batch(const TensorBatch& batch, int t_min, int t_max) {
    TensorBatch out;
    for (int s = 0; s < batch.size(); ++s) {
        const int t = batch.target_period[s];
        if (t < t_min || t > t_max) continue;
        out.sequences.push_back(batch.sequences[s]);
        out.targets.push_back(batch.targets[s]);
        out.target_period.push_back(t);
    }
    return out;
}

RollingOutcome rolling_midas(const EstimatorSpec& spec, const MixedFrequencyDataset& ds, int h_m,
                             int t1, RandomSeed seed) {
    if (!spec.midas || spec.midas->covariate_indices.empty())
        throw SelectionError("rolling_forecast: MIDAS specification not resolved");
    const MidasModelSpec& ms = *spec.midas;
    const LagSpec lags{0, ms.lag_count - 1};
    const AlignmentSpec aspec = fa_alignment_spec(ds, lags, h_m, &ms.covariate_indices);
    const AlignedDesign full = frequency_align(ds, aspec);

    // Restrict to the training window for fitting.
    AlignedDesign train_ad = full;
    for (int r = 0; r < train_ad.rows(); ++r)
        if (train_ad.period[r] > t1) train_ad.valid[r] = 0;

    Eigen::VectorXd fitted;
    if (spec.kind == EstimatorSpec::Kind::Midas) {
        const MidasFit fit = midas_fit(train_ad, std::vector<Weighting>{ms.weighting}, seed);
        fitted = predict(fit, full);
    } else {
        const UMidasFit fit = umidas_fit(train_ad);
        fitted = predict(fit, full);
    }

    RollingOutcome out;
    const int T = ds.periods();
    const int h = low_frequency_horizon(h_m, ds.covariates[0].ratio);
    for (int t = t1 + h; t <= T; ++t) {
        const int row = full.row_of_period(t);
        if (row < 0 || !full.valid[static_cast<std::size_t>(row)] ||
            !std::isfinite(fitted[row])) {
            ++out.n_skipped;
            continue;
        }
        out.records.push_back({t - h, t, h_m, fitted[row], ds.target.at(t)});
    }
    return out;
}

RollingOutcome rolling_lstm(const EstimatorSpec& spec, const MixedFrequencyDataset& ds, int h_m,
                            int t1, RandomSeed seed) {
    const int m = ds.covariates.empty() ? 1 : ds.covariates[0].ratio;
    const int h = low_frequency_horizon(h_m, m);

    TensorBatch all;
    if (spec.kind == EstimatorSpec::Kind::SaLstm) {
        all = sample_align(ds, spec.timesteps, h_m, 1);
    } else {
        const AlignedDesign ad = frequency_align(ds, fa_alignment_spec(ds, spec.lags, h_m));
        all = design_to_tensor(ad, spec.timesteps);
    }

    const TensorBatch train_batch = filter_batch(all, 1, t1);
    if (train_batch.size() < 2)
        throw AlignmentError("rolling_forecast: too few training sequences");

    const HyperChoice& hyper = spec.hyper_for(h_m);
    TrainConfig cfg;
    cfg.epochs_max = hyper.epochs;
    cfg.batch_size = hyper.batch.resolve(train_batch.size());
    cfg.dropout_rate = hyper.dropout;
    cfg.cells = hyper.cells;
    cfg.early_stop_patience = 0;  // fixed-epoch protocol
    cfg.seed = seed;
    const LstmNetwork net = train(train_batch, cfg);

    RollingOutcome out;
    const int T = ds.periods();
    const TensorBatch eval = filter_batch(all, t1 + h, T);
    const Eigen::VectorXd preds = net.predict(eval);
    std::vector<char> seen(static_cast<std::size_t>(T + 1), 0);
    for (int s = 0; s < eval.size(); ++s) {
        const int t = eval.target_period[s];
        seen[static_cast<std::size_t>(t)] = 1;
        out.records.push_back({t - h, t, h_m, preds[s], ds.target.at(t)});
    }
    for (int t = t1 + h; t <= T; ++t)
        if (!seen[static_cast<std::size_t>(t)]) ++out.n_skipped;
    return out;
}

}  // namespace

RollingOutcome rolling_forecast(const EstimatorSpec& spec, const MixedFrequencyDataset& ds,
                                int h_m, double split, RandomSeed seed,
                                const std::vector<double>* oracle_mean) {
    if (h_m < 0) throw DomainError("rolling_forecast: h_m must be >= 0");
    const int T = ds.periods();
    const int m = ds.covariates.empty() ? 1 : ds.covariates[0].ratio;
    const SplitSizes sizes = resolve_split(T, split);
    const int h = low_frequency_horizon(h_m, m);
    if (sizes.t2 < h)
        throw DomainError("rolling_forecast: evaluation window shorter than horizon");

    switch (spec.kind) {
        case EstimatorSpec::Kind::Midas:
        case EstimatorSpec::Kind::UMidas:
            return rolling_midas(spec, ds, h_m, sizes.t1, seed);
        case EstimatorSpec::Kind::SaLstm:
        case EstimatorSpec::Kind::FaLstm:
            return rolling_lstm(spec, ds, h_m, sizes.t1, seed);
        case EstimatorSpec::Kind::Oracle: {
            if (!oracle_mean) throw DomainError("rolling_forecast: oracle needs conditional mean");
            RollingOutcome out;
            for (int t = sizes.t1 + h; t <= T; ++t)
                out.records.push_back({t - h, t, h_m,
                                       (*oracle_mean)[static_cast<std::size_t>(t - 1)],
                                       ds.target.at(t)});
            return out;
        }
        case EstimatorSpec::Kind::PlantedError: {
            RollingOutcome out;
            for (int t = sizes.t1 + h; t <= T; ++t)
                out.records.push_back(
                    {t - h, t, h_m, ds.target.at(t) + spec.planted_error, ds.target.at(t)});
            return out;
        }
    }
    throw DomainError("rolling_forecast: unknown estimator kind");
}

MidasModelSpec search_midas_spec(const DgpConfig& dgp, int h_m, int tuning_reps, double split,
                                 RandomSeed seed, int min_lags, int max_lags) {
    if (tuning_reps < 1) throw SelectionError("search_midas_spec: need tuning replications");

    std::vector<MixedFrequencyDataset> tuning;
    tuning.reserve(static_cast<std::size_t>(tuning_reps));
    for (int r = 0; r < tuning_reps; ++r) {
        DgpConfig cfg = dgp;
        cfg.seed = subseed(seed, "tuning-rep", static_cast<std::uint64_t>(r));
        tuning.push_back(gen_dgp(cfg));
    }

    std::vector<std::vector<int>> pairs;
    if (dgp.K == 1) {
        pairs.push_back({0});
    } else {
        for (int a = 0; a < dgp.K; ++a)
            for (int b = a + 1; b < dgp.K; ++b) pairs.push_back({a, b});
    }

    MidasModelSpec best;
    double best_score = std::numeric_limits<double>::infinity();
    bool found = false;
    for (int lags = min_lags; lags <= max_lags; ++lags) {
        for (const auto& pair : pairs) {
            for (Weighting w : {Weighting::NormalizedAlmon, Weighting::AlmonNonNormalized}) {
                MidasModelSpec cand;
                cand.covariate_indices = pair;
                cand.lag_count = lags;
                cand.weighting = w;

                double total = 0.0;
                int ok = 0;
                for (int r = 0; r < tuning_reps; ++r) {
                    EstimatorSpec es;
                    es.kind = EstimatorSpec::Kind::Midas;
                    es.name = "MIDAS";
                    es.midas = cand;
                    try {
                        const RollingOutcome run = rolling_forecast(
                            es, tuning[static_cast<std::size_t>(r)], h_m, split,
                            subseed(seed, "tuning-fit", static_cast<std::uint64_t>(r)));
                        if (run.records.empty()) continue;
                        const double r_rmsfe = rmsfe(run.records);
                        total += r_rmsfe * r_rmsfe;  // validation MSE
                        ++ok;
                    } catch (const Error&) {
                    }
                }
                if (ok == 0) continue;
                const double score = total / ok;
                if (!found || score < best_score) {
                    best = cand;
                    best_score = score;
                    found = true;
                }
            }
        }
    }
    if (!found) throw SelectionError("search_midas_spec: no candidate specification succeeded");
    return best;
}

const McResultRow& McTable::row(const std::string& estimator, int h_m) const {
    for (const auto& r : rows)
        if (r.estimator == estimator && r.h_m == h_m) return r;
    throw DomainError("McTable: no row for " + estimator + " at h_m=" + std::to_string(h_m));
}

namespace {

// Everything one replication contributes for one estimator.
struct RepContribution {
    bool ok = false;
    double rep_rmsfe = 0.0;                     // mean over estimations
    std::vector<std::vector<double>> se_runs;   // per estimation, per origin (NaN = skipped)
};

}  // namespace

McTable run_monte_carlo(const McExperiment& exp) {
    if (exp.roster.empty()) throw DomainError("run_monte_carlo: empty roster");
    if (exp.replications < 1) throw DomainError("run_monte_carlo: need replications >= 1");
    exp.dgp.validate();

    McTable table;
    table.notes.push_back(
        "dm: per-origin squared-error differentials averaged across replications, "
        "rectangular HAC truncation at lag h-1");

    const bool needs_oracle = std::any_of(exp.roster.begin(), exp.roster.end(), [](const auto& e) {
        return e.kind == EstimatorSpec::Kind::Oracle;
    });

    for (int h_m : exp.horizons) {
        // Resolve the (U-)MIDAS specification once per horizon on tuning reps.
        std::optional<MidasModelSpec> shared_spec;
        std::vector<EstimatorSpec> roster = exp.roster;
        for (auto& e : roster) {
            if ((e.kind == EstimatorSpec::Kind::Midas || e.kind == EstimatorSpec::Kind::UMidas) &&
                !e.midas) {
                if (!shared_spec) {
                    shared_spec = search_midas_spec(
                        exp.dgp, h_m, exp.tuning_reps, exp.split,
                        subseed(exp.seed, "spec-search", static_cast<std::uint64_t>(h_m)));
                    table.notes.push_back("h_m=" + std::to_string(h_m) +
                                          " midas spec: " + shared_spec->str());
                }
                e.midas = shared_spec;
            }
        }

        const int h = low_frequency_horizon(h_m, exp.dgp.m);
        const SplitSizes sizes = resolve_split(exp.dgp.T, exp.split);
        const int n_origins = sizes.t2 - h + 1;

        // Per replication, per estimator results; filled by parallel workers
        // and merged in replication order so the output does not depend on
        // the job count.
        std::vector<std::vector<RepContribution>> contrib(
            static_cast<std::size_t>(exp.replications),
            std::vector<RepContribution>(roster.size()));

        auto run_rep = [&](int rep) {
            DgpConfig cfg = exp.dgp;
            cfg.seed = subseed(exp.seed, "rep", static_cast<std::uint64_t>(rep));
            const DgpDraw draw = gen_dgp_full(cfg);

            for (std::size_t e = 0; e < roster.size(); ++e) {
                const EstimatorSpec& spec = roster[e];
                const int n_est = spec.is_lstm() ? exp.estimations_per_rep : 1;
                RepContribution& rc = contrib[static_cast<std::size_t>(rep)][e];
                double rep_total = 0.0;
                bool failed = false;
                for (int est = 0; est < n_est && !failed; ++est) {
                    const RandomSeed run_seed =
                        subseed(exp.seed, "est-" + spec.name,
                                static_cast<std::uint64_t>(rep) * 1009 +
                                    static_cast<std::uint64_t>(est) +
                                    7919ULL * static_cast<std::uint64_t>(h_m));
                    try {
                        const RollingOutcome run = rolling_forecast(
                            spec, draw.dataset, h_m, exp.split, run_seed,
                            needs_oracle ? &draw.conditional_mean : nullptr);
                        if (run.records.empty()) throw AlignmentError("no forecasts");
                        rep_total += rmsfe(run.records);
                        std::vector<double> se(static_cast<std::size_t>(n_origins), kNaN);
                        for (const auto& rec : run.records) {
                            const int origin_idx = rec.target - (sizes.t1 + h);
                            if (origin_idx >= 0 && origin_idx < n_origins)
                                se[static_cast<std::size_t>(origin_idx)] =
                                    rec.error() * rec.error();
                        }
                        rc.se_runs.push_back(std::move(se));
                    } catch (const Error&) {
                        failed = true;
                    }
                }
                if (!failed) {
                    rc.ok = true;
                    rc.rep_rmsfe = rep_total / n_est;
                } else {
                    rc.se_runs.clear();
                }
            }
        };

        const int jobs = std::max(1, exp.jobs);
        if (jobs == 1) {
            for (int rep = 0; rep < exp.replications; ++rep) run_rep(rep);
        } else {
            std::vector<std::thread> pool;
            std::atomic<int> next{0};
            for (int w = 0; w < jobs; ++w) {
                pool.emplace_back([&]() {
                    while (true) {
                        const int rep = next.fetch_add(1);
                        if (rep >= exp.replications) break;
                        run_rep(rep);
                    }
                });
            }
            for (auto& t : pool) t.join();
        }

        // Merge in replication order.
        struct Accum {
            std::vector<double> rep_rmsfe;
            std::vector<double> origin_se_sum;
            std::vector<long> origin_se_n;
            int n_fail = 0;
        };
        std::vector<Accum> acc(roster.size());
        for (auto& a : acc) {
            a.origin_se_sum.assign(static_cast<std::size_t>(n_origins), 0.0);
            a.origin_se_n.assign(static_cast<std::size_t>(n_origins), 0);
        }
        for (int rep = 0; rep < exp.replications; ++rep) {
            for (std::size_t e = 0; e < roster.size(); ++e) {
                const RepContribution& rc = contrib[static_cast<std::size_t>(rep)][e];
                if (!rc.ok) {
                    ++acc[e].n_fail;
                    continue;
                }
                acc[e].rep_rmsfe.push_back(rc.rep_rmsfe);
                for (const auto& se : rc.se_runs) {
                    for (int o = 0; o < n_origins; ++o) {
                        if (std::isnan(se[static_cast<std::size_t>(o)])) continue;
                        acc[e].origin_se_sum[static_cast<std::size_t>(o)] +=
                            se[static_cast<std::size_t>(o)];
                        acc[e].origin_se_n[static_cast<std::size_t>(o)] += 1;
                    }
                }
            }
        }

        int bench_idx = -1;
        for (std::size_t e = 0; e < roster.size(); ++e)
            if (roster[e].name == exp.dm_benchmark) bench_idx = static_cast<int>(e);

        auto pooled = [&](std::size_t e) {
            std::vector<double> out(static_cast<std::size_t>(n_origins), kNaN);
            for (int o = 0; o < n_origins; ++o)
                if (acc[e].origin_se_n[static_cast<std::size_t>(o)] > 0)
                    out[static_cast<std::size_t>(o)] =
                        acc[e].origin_se_sum[static_cast<std::size_t>(o)] /
                        acc[e].origin_se_n[static_cast<std::size_t>(o)];
            return out;
        };

        for (std::size_t e = 0; e < roster.size(); ++e) {
            McResultRow row;
            row.estimator = roster[e].name;
            row.h_m = h_m;
            row.T = exp.dgp.T;
            row.n_fail = acc[e].n_fail;
            row.dm_stat = kNaN;
            row.dm_p = kNaN;
            const auto& r = acc[e].rep_rmsfe;
            if (!r.empty()) {
                double mean = 0.0;
                for (double v : r) mean += v;
                mean /= static_cast<double>(r.size());
                double var = 0.0;
                for (double v : r) var += (v - mean) * (v - mean);
                row.mean_rmsfe = mean;
                row.sd_rmsfe = r.size() > 1 ? std::sqrt(var / (r.size() - 1)) : 0.0;
            } else {
                row.mean_rmsfe = kNaN;
                row.sd_rmsfe = kNaN;
            }

            if (bench_idx >= 0 && static_cast<int>(e) != bench_idx && !r.empty()) {
                const std::vector<double> se_model = pooled(e);
                const std::vector<double> se_bench = pooled(static_cast<std::size_t>(bench_idx));
                // dm_test consumes error series; the square roots of the pooled
                // per-origin MSEs give it the pooled loss differential.
                std::vector<double> da, db;
                for (int o = 0; o < n_origins; ++o) {
                    const double sm = se_model[static_cast<std::size_t>(o)];
                    const double sb = se_bench[static_cast<std::size_t>(o)];
                    if (std::isnan(sm) || std::isnan(sb)) continue;
                    da.push_back(std::sqrt(sm));
                    db.push_back(std::sqrt(sb));
                }
                if (da.size() >= 5) {
                    try {
                        const DmResult dm = dm_test(da, db, h);
                        row.dm_stat = dm.statistic;
                        row.dm_p = dm.p_value;
                    } catch (const Error&) {
                    }
                }
            }
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

}  // namespace mfcast
