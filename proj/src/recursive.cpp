#include "mfcast/recursive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfcast/alignment.hpp"
#include "mfcast/lstm.hpp"
#include "mfcast/midas.hpp"

namespace mfcast {

int monthly_horizon(int h_m, const DelayPolicy& d) { return h_m + d.monthly; }

int quarterly_horizon(int h_m, int m, const DelayPolicy& d) {
    return (h_m + d.quarterly + m - 1) / m;
}

int target_horizon(int h_m, int m, const DelayPolicy& d) {
    return std::max(1, (h_m + d.target + m - 1) / m);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int highest_ratio(const MixedFrequencyDataset& ds) {
    int m = 1;
    for (const auto& s : ds.covariates) m = std::max(m, s.ratio);
    return m;
}

// Alignment spec for the guiding model: monthly covariates with P_M lags,
// quarterly covariates and AR dynamics with P_Q lags, at delay-adjusted
// horizons.
AlignmentSpec guiding_spec(const MixedFrequencyDataset& ds, int m, int h_m, int p_m, int p_q,
                           const DelayPolicy& delays, const std::set<std::string>* keep,
                           bool with_ar, bool monthly_only) {
    AlignmentSpec spec;
    for (const auto& s : ds.covariates) {
        if (keep && !keep->count(s.id)) continue;
        if (s.ratio == m && m > 1) {
            spec.covariates.push_back({s.id, LagSpec{0, p_m - 1}, monthly_horizon(h_m, delays)});
        } else if (s.ratio == 1 && !monthly_only) {
            spec.covariates.push_back(
                {s.id, LagSpec{0, p_q - 1}, quarterly_horizon(h_m, m, delays)});
        }
    }
    if (with_ar) spec.ar = ArAlignSpec{LagSpec{0, p_q - 1}, target_horizon(h_m, m, delays)};
    return spec;
}

long lstm_param_count(int features, const std::vector<int>& cells) {
    long total = 0;
    int in = features;
    for (int c : cells) {
        total += 4L * c * (in + c + 1);
        in = c;
    }
    total += cells.back() + 1;
    return total;
}

TensorBatch filter_by_period(const TensorBatch& batch, int t_min, int t_max) {
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

void split_batch(const TensorBatch& all, double split, TensorBatch& tr, TensorBatch& va) {
    const int n_train =
        std::max(2, static_cast<int>(std::lround(split * all.size())));
    for (int s = 0; s < all.size(); ++s) {
        auto& dst = s < n_train ? tr : va;
        dst.sequences.push_back(all.sequences[s]);
        dst.targets.push_back(all.targets[s]);
        dst.target_period.push_back(all.target_period[s]);
    }
}

struct OriginContext {
    const MixedFrequencyDataset& ds;
    const RecursiveModelConfig& model;
    const RecursiveConfig& cfg;
    int m;
    int h_m;
    int h_y;
    int t_y;     // newest usable target observation
    int target;  // period being forecast
};

// Sequences for one configuration: full-sample construction, then filtered so
// that fit sequences end at or before t_y and exactly one sequence ends at
// the forecast target. Feature windows only reach published data by the
// alignment horizon rule.
struct ComboBatches {
    TensorBatch fit;
    TensorBatch target;
    int features = 0;
};

ComboBatches build_batches(const OriginContext& ctx, const HyperChoice& combo,
                           const std::set<std::string>* keep) {
    ComboBatches out;
    TensorBatch all;
    switch (ctx.model.kind) {
        case RecursiveKind::UniLstm: {
            AlignmentSpec spec;
            spec.ar = ArAlignSpec{LagSpec{0, 0}, ctx.h_y};
            all = design_to_tensor(frequency_align(ctx.ds, spec), combo.timesteps);
            break;
        }
        case RecursiveKind::SaLstm: {
            MixedFrequencyDataset sub;
            sub.target = ctx.ds.target;
            for (const auto& s : ctx.ds.covariates)
                if (s.ratio == ctx.m && (!keep || keep->count(s.id)))
                    sub.covariates.push_back(s);
            if (sub.covariates.empty()) throw SelectionError("no monthly variables selected");
            all = sample_align(sub, combo.timesteps, monthly_horizon(ctx.h_m, ctx.cfg.delays), 1);
            break;
        }
        case RecursiveKind::FaLstm: {
            AlignmentSpec spec = guiding_spec(ctx.ds, ctx.m, ctx.h_m, combo.p_m, combo.p_q,
                                              ctx.cfg.delays, keep, true, false);
            if (spec.covariates.empty() && !spec.ar) throw SelectionError("empty specification");
            all = design_to_tensor(frequency_align(ctx.ds, spec), combo.timesteps);
            break;
        }
        case RecursiveKind::Ar1:
            throw DomainError("build_batches: AR(1) has no tensor form");
    }
    out.features = all.features();
    out.fit = filter_by_period(all, 1, ctx.t_y);
    out.target = filter_by_period(all, ctx.target, ctx.target);
    return out;
}

// LASSO variable selection on the information available at the origin.
LassoSelection select_variables(const OriginContext& ctx, int p_m, int p_q,
                                const std::set<std::string>& force) {
    const bool monthly_only = ctx.model.kind == RecursiveKind::SaLstm;
    AlignmentSpec spec = guiding_spec(ctx.ds, ctx.m, ctx.h_m, p_m, p_q, ctx.cfg.delays, nullptr,
                                      !monthly_only, monthly_only);
    AlignedDesign ad = frequency_align(ctx.ds, spec);
    for (int r = 0; r < ad.rows(); ++r)
        if (ad.period[r] > ctx.t_y) ad.valid[r] = 0;
    if (ad.n_valid() == 0) throw SelectionError("no usable selection window");
    return lasso_select(ad, ctx.model.lasso_folds, ctx.model.lasso_n_lambda, force);
}

}  // namespace

RecursiveResult recursive_forecast(const MixedFrequencyDataset& ds,
                                   const std::vector<RecursiveModelConfig>& models,
                                   const RecursiveConfig& cfg) {
    const ValidationReport vr = validate_dataset(ds);
    if (!vr.ok()) throw DomainError("recursive_forecast: invalid dataset\n" + vr.str());
    if (models.empty()) throw DomainError("recursive_forecast: no models");

    const int n = ds.periods();
    const int m = highest_ratio(ds);
    const int oos_start = cfg.oos_start > 0 ? cfg.oos_start : n - std::max(1, n / 5) + 1;
    if (oos_start < 2 || oos_start > n)
        throw DomainError("recursive_forecast: out-of-sample start outside the sample");

    RecursiveResult result;

    for (const auto& model : models) {
        std::vector<ForecastRecord>& records = result.forecasts[model.name];
        for (int h_m : cfg.horizons) {
            const int h_y = target_horizon(h_m, m, cfg.delays);
            for (int target = oos_start; target <= n; ++target) {
                const int t_y = target - h_y;
                if (t_y < 3) {
                    result.warnings.push_back(model.name + ": skipped target " +
                                              std::to_string(target) + " at h_m=" +
                                              std::to_string(h_m) + " (no history)");
                    continue;
                }
                const RandomSeed origin_seed =
                    subseed(cfg.seed, "origin-" + model.name,
                            static_cast<std::uint64_t>(target) * 131 +
                                static_cast<std::uint64_t>(h_m));

                try {
                    if (model.kind == RecursiveKind::Ar1) {
                        std::vector<double> history(ds.target.values.begin(),
                                                    ds.target.values.begin() + t_y);
                        const Ar1Fit fit = ar1_fit(history, h_y);
                        const double fc = predict(fit, ds.target.at(t_y));
                        records.push_back({target - h_y, target, h_m, fc, ds.target.at(target)});
                        continue;
                    }

                    OriginContext ctx{ds, model, cfg, m, h_m, h_y, t_y, target};
                    std::set<std::string> force;
                    if (cfg.always_include_from > 0 && target >= cfg.always_include_from)
                        force = cfg.always_include;

                    const std::vector<HyperChoice> combos = enumerate_grid(model.grid, 0);
                    struct Best {
                        double val_rmsfe = kInf;
                        long params = 0;
                        long index = -1;
                        std::vector<std::string> selected;
                        double lambda = 0.0;
                    } best;

                    for (const auto& combo : combos) {
                        try {
                            std::vector<std::string> selected;
                            double lambda = 0.0;
                            std::set<std::string> keep;
                            const std::set<std::string>* keep_ptr = nullptr;
                            if (model.use_lasso && model.kind != RecursiveKind::UniLstm) {
                                const LassoSelection sel =
                                    select_variables(ctx, std::max(1, combo.p_m),
                                                     std::max(1, combo.p_q), force);
                                selected = sel.selected;
                                lambda = sel.lambda;
                                keep.insert(selected.begin(), selected.end());
                                keep_ptr = &keep;
                            }

                            const ComboBatches batches = build_batches(ctx, combo, keep_ptr);
                            if (batches.fit.size() < 6) throw AlignmentError("too few sequences");

                            TensorBatch tr, va;
                            split_batch(batches.fit, model.tuning_split, tr, va);
                            if (va.size() < 1) throw AlignmentError("empty validation split");

                            double total = 0.0;
                            for (int est = 0; est < model.tuning_estimations; ++est) {
                                TrainConfig tc;
                                tc.epochs_max = cfg.max_epochs;
                                tc.early_stop_patience = cfg.early_stop_patience;
                                tc.batch_size = combo.batch.resolve(tr.size());
                                tc.dropout_rate = combo.dropout;
                                tc.cells = combo.cells;
                                tc.seed = subseed(origin_seed, "tune",
                                                  static_cast<std::uint64_t>(combo.grid_index) *
                                                          101 +
                                                      static_cast<std::uint64_t>(est));
                                const LstmNetwork net = train(tr, tc, &va);
                                const Eigen::VectorXd pred = net.predict(va);
                                double se = 0.0;
                                for (int s = 0; s < va.size(); ++s) {
                                    const double e = va.targets[s] - pred[s];
                                    se += e * e;
                                }
                                total += std::sqrt(se / va.size());
                            }
                            const double score = total / model.tuning_estimations;
                            const long params = lstm_param_count(batches.features, combo.cells);
                            const bool better =
                                best.index < 0 || score < best.val_rmsfe ||
                                (score == best.val_rmsfe && params < best.params);
                            if (better) {
                                best.val_rmsfe = score;
                                best.params = params;
                                best.index = combo.grid_index;
                                best.selected = std::move(selected);
                                best.lambda = lambda;
                            }
                        } catch (const Error&) {
                            // combination unusable at this origin
                        }
                    }
                    if (best.index < 0)
                        throw SelectionError("no usable combination at target " +
                                             std::to_string(target));
                    const HyperChoice chosen = combos[static_cast<std::size_t>(best.index)];

                    std::set<std::string> keep(best.selected.begin(), best.selected.end());
                    const std::set<std::string>* keep_ptr =
                        (model.use_lasso && model.kind != RecursiveKind::UniLstm) ? &keep
                                                                                  : nullptr;
                    const ComboBatches batches = build_batches(ctx, chosen, keep_ptr);
                    if (batches.target.size() != 1)
                        throw AlignmentError("target sequence infeasible at period " +
                                             std::to_string(target));

                    TensorBatch tr, va;
                    split_batch(batches.fit, model.tuning_split, tr, va);

                    double forecast_sum = 0.0;
                    for (int est = 0; est < model.final_estimations; ++est) {
                        TrainConfig tc;
                        tc.epochs_max = cfg.max_epochs;
                        tc.early_stop_patience = cfg.early_stop_patience;
                        tc.batch_size = chosen.batch.resolve(tr.size());
                        tc.dropout_rate = chosen.dropout;
                        tc.cells = chosen.cells;
                        tc.seed = subseed(origin_seed, "final", static_cast<std::uint64_t>(est));
                        const LstmNetwork net = train(tr, tc, va.size() ? &va : nullptr);
                        forecast_sum += net.predict(batches.target)[0];
                    }
                    const double fc = forecast_sum / model.final_estimations;
                    records.push_back({target - h_y, target, h_m, fc, ds.target.at(target)});

                    SelectionEvent ev;
                    ev.model = model.name;
                    ev.h_m = h_m;
                    ev.target = target;
                    ev.selected = best.selected;
                    ev.lambda = best.lambda;
                    ev.chosen = chosen;
                    result.selections.push_back(std::move(ev));
                } catch (const Error& err) {
                    result.warnings.push_back(model.name + " h_m=" + std::to_string(h_m) +
                                              " target=" + std::to_string(target) + ": " +
                                              err.what());
                }
            }
        }
    }
    return result;
}

}  // namespace mfcast
