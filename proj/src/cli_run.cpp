#include "mfcast/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mfcast/errors.hpp"
#include "mfcast/io.hpp"
#include "mfcast/recursive.hpp"
#include "mfcast/simulation.hpp"

namespace mfcast::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Schema validation: nested allowed-key trees; unknown keys are rejected.

struct Schema {
    std::map<std::string, Schema> keys;
    const Schema* items = nullptr;  // schema for array elements
    bool any = false;               // opaque subtree

    Schema() = default;
    explicit Schema(std::initializer_list<std::pair<const std::string, Schema>> init)
        : keys(init) {}
};

void check_schema(const json& doc, const Schema& schema, const std::string& path) {
    if (schema.any) return;
    if (doc.is_object()) {
        for (const auto& [key, value] : doc.items()) {
            auto it = schema.keys.find(key);
            if (it == schema.keys.end())
                throw ConfigError("unknown config key '" + (path.empty() ? key : path + "." + key) +
                                  "'");
            check_schema(value, it->second, path.empty() ? key : path + "." + key);
        }
    } else if (doc.is_array() && schema.items) {
        for (std::size_t i = 0; i < doc.size(); ++i)
            check_schema(doc[i], *schema.items, path + "[" + std::to_string(i) + "]");
    }
}

Schema leaf() { return Schema{}; }
Schema any_schema() {
    Schema s;
    s.any = true;
    return s;
}

// Static storage for array-item schemas referenced by pointer.
Schema& stored(const std::string& name, Schema value) {
    static std::map<std::string, Schema> store;
    auto [it, inserted] = store.emplace(name, std::move(value));
    return it->second;
}

Schema dgp_schema() {
    return Schema{{"T", leaf()},         {"m", leaf()},     {"K", leaf()},
                  {"J", leaf()},         {"alpha", leaf()}, {"beta", leaf()},
                  {"theta", any_schema()}, {"x_process", leaf()}, {"rho", leaf()},
                  {"noise_sd", leaf()},  {"seed", leaf()}};
}

Schema lag_schema() { return Schema{{"j_min", leaf()}, {"j_max", leaf()}}; }

Schema alignment_schema() {
    Schema cov{{"id", leaf()}, {"lags", lag_schema()}, {"horizon", leaf()}};
    Schema s{{"covariates", leaf()}, {"ar", Schema{{"lags", lag_schema()}, {"horizon", leaf()}}}};
    s.keys["covariates"].items = &stored("align-cov", cov);
    return s;
}

Schema hyper_grid_schema() {
    return Schema{{"epochs", leaf()},    {"dropout", leaf()},       {"batch", any_schema()},
                  {"cells", any_schema()}, {"timesteps", leaf()},     {"monthly_lags", leaf()},
                  {"quarterly_lags", leaf()}};
}

Schema hyper_choice_schema() {
    return Schema{{"epochs", leaf()}, {"dropout", leaf()},   {"batch", leaf()},
                  {"cells", leaf()},  {"timesteps", leaf()}, {"p_m", leaf()},
                  {"p_q", leaf()}};
}

Schema estimator_schema() {
    Schema s{{"kind", leaf()},
             {"name", leaf()},
             {"timesteps", leaf()},
             {"lags", lag_schema()},
             {"hyper", hyper_choice_schema()},
             {"hyper_by_horizon", any_schema()},
             {"midas", Schema{{"covariates", leaf()}, {"lag_count", leaf()}, {"weighting", leaf()}}},
             {"planted_error", leaf()}};
    return s;
}

// ---------------------------------------------------------------------------
// Config parsing helpers.

DgpConfig parse_dgp(const json& doc) {
    DgpConfig cfg;
    cfg.T = doc.value("T", cfg.T);
    cfg.m = doc.value("m", cfg.m);
    cfg.K = doc.value("K", cfg.K);
    cfg.J = doc.value("J", cfg.J);
    cfg.alpha = doc.value("alpha", cfg.alpha);
    if (doc.contains("beta")) {
        if (doc["beta"].is_number()) {
            cfg.beta = {doc["beta"].get<double>()};
        } else {
            cfg.beta = doc["beta"].get<std::vector<double>>();
        }
    }
    if (doc.contains("theta")) {
        cfg.theta.clear();
        const json& th = doc["theta"];
        auto parse_one = [](const json& t) {
            if (!t.is_array() || t.size() != 2)
                throw ConfigError("dgp.theta entries must be [theta1, theta2]");
            return AlmonTheta{t[0].get<double>(), t[1].get<double>()};
        };
        if (th.is_array() && !th.empty() && th[0].is_array()) {
            for (const auto& t : th) cfg.theta.push_back(parse_one(t));
        } else {
            cfg.theta.push_back(parse_one(th));
        }
    }
    if (doc.contains("x_process")) {
        const std::string p = doc["x_process"].get<std::string>();
        if (p == "iid-normal") {
            cfg.x_process = XProcess::IidNormal;
        } else if (p == "ar1") {
            cfg.x_process = XProcess::Ar1;
        } else {
            throw ConfigError("dgp.x_process must be 'iid-normal' or 'ar1'");
        }
    }
    cfg.rho = doc.value("rho", cfg.rho);
    cfg.noise_sd = doc.value("noise_sd", cfg.noise_sd);
    cfg.seed.value = doc.value("seed", std::uint64_t{0});
    return cfg;
}

LagSpec parse_lags(const json& doc) {
    LagSpec l;
    l.j_min = doc.value("j_min", 0);
    l.j_max = doc.value("j_max", l.j_min);
    return l;
}

BatchSpec parse_batch(const json& doc) {
    if (doc.is_number_integer()) return BatchSpec::abs(doc.get<int>());
    if (doc.is_string()) {
        const std::string s = doc.get<std::string>();
        // accepted forms: "12", "input/2", "input/10"
        if (s.rfind("input/", 0) == 0) return BatchSpec::frac(1.0 / std::stod(s.substr(6)));
        return BatchSpec::abs(std::stoi(s));
    }
    throw ConfigError("batch entries must be integers or 'input/<k>' strings");
}

HyperGrid parse_grid(const json& doc) {
    HyperGrid g;
    if (doc.contains("epochs")) g.epochs = doc["epochs"].get<std::vector<int>>();
    if (doc.contains("dropout")) g.dropout = doc["dropout"].get<std::vector<double>>();
    if (doc.contains("batch")) {
        g.batch.clear();
        for (const auto& b : doc["batch"]) g.batch.push_back(parse_batch(b));
    }
    if (doc.contains("cells")) {
        g.cells.clear();
        for (const auto& c : doc["cells"]) {
            if (c.is_number_integer()) {
                g.cells.push_back({c.get<int>()});
            } else {
                g.cells.push_back(c.get<std::vector<int>>());
            }
        }
    }
    if (doc.contains("timesteps")) g.timesteps = doc["timesteps"].get<std::vector<int>>();
    if (doc.contains("monthly_lags")) g.monthly_lags = doc["monthly_lags"].get<std::vector<int>>();
    if (doc.contains("quarterly_lags"))
        g.quarterly_lags = doc["quarterly_lags"].get<std::vector<int>>();
    return g;
}

HyperChoice parse_hyper(const json& doc) {
    HyperChoice h;
    h.epochs = doc.value("epochs", h.epochs);
    h.dropout = doc.value("dropout", h.dropout);
    if (doc.contains("batch")) h.batch = parse_batch(doc["batch"]);
    if (doc.contains("cells")) {
        if (doc["cells"].is_number_integer()) {
            h.cells = {doc["cells"].get<int>()};
        } else {
            h.cells = doc["cells"].get<std::vector<int>>();
        }
    }
    h.timesteps = doc.value("timesteps", h.timesteps);
    h.p_m = doc.value("p_m", h.p_m);
    h.p_q = doc.value("p_q", h.p_q);
    return h;
}

Weighting parse_weighting(const std::string& s) {
    if (s == "nealmon") return Weighting::NormalizedAlmon;
    if (s == "almon-nonnorm") return Weighting::AlmonNonNormalized;
    throw ConfigError("weighting must be 'nealmon' or 'almon-nonnorm'");
}

EstimatorSpec parse_estimator(const json& doc) {
    EstimatorSpec e;
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "midas") {
        e.kind = EstimatorSpec::Kind::Midas;
    } else if (kind == "umidas") {
        e.kind = EstimatorSpec::Kind::UMidas;
    } else if (kind == "sa-lstm") {
        e.kind = EstimatorSpec::Kind::SaLstm;
    } else if (kind == "fa-lstm") {
        e.kind = EstimatorSpec::Kind::FaLstm;
    } else if (kind == "oracle") {
        e.kind = EstimatorSpec::Kind::Oracle;
    } else if (kind == "planted") {
        e.kind = EstimatorSpec::Kind::PlantedError;
    } else {
        throw ConfigError("unknown estimator kind '" + kind + "'");
    }
    e.name = doc.value("name", kind);
    e.timesteps = doc.value("timesteps", 1);
    if (doc.contains("lags")) e.lags = parse_lags(doc["lags"]);
    if (doc.contains("hyper")) e.hyper = parse_hyper(doc["hyper"]);
    if (doc.contains("hyper_by_horizon")) {
        for (const auto& [key, value] : doc["hyper_by_horizon"].items())
            e.hyper_by_horizon[std::stoi(key)] = parse_hyper(value);
    }
    if (doc.contains("midas")) {
        MidasModelSpec ms;
        const json& mj = doc["midas"];
        if (mj.contains("covariates"))
            ms.covariate_indices = mj["covariates"].get<std::vector<int>>();
        ms.lag_count = mj.value("lag_count", ms.lag_count);
        if (mj.contains("weighting")) ms.weighting = parse_weighting(mj["weighting"]);
        e.midas = ms;
    }
    e.planted_error = doc.value("planted_error", 0.0);
    return e;
}

AlignmentSpec parse_alignment(const json& doc) {
    AlignmentSpec spec;
    for (const auto& cov : doc.at("covariates")) {
        CovariateAlignSpec c;
        c.id = cov.at("id").get<std::string>();
        c.lags = parse_lags(cov.at("lags"));
        c.horizon = cov.value("horizon", 0);
        spec.covariates.push_back(std::move(c));
    }
    if (doc.contains("ar")) {
        ArAlignSpec ar;
        ar.lags = parse_lags(doc["ar"].at("lags"));
        ar.horizon = doc["ar"].value("horizon", 1);
        spec.ar = ar;
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Run manifest: configuration hash + seeds, no wall-clock content so reruns
// are byte-identical.

std::uint64_t hash_string(const std::string& s) { return detail::fnv1a(s); }

void write_run_manifest(const fs::path& dir, const std::string& command, const json& config) {
    json manifest;
    manifest["command"] = command;
    manifest["config"] = config;
    std::ostringstream canonical;
    canonical << config.dump();
    manifest["config_hash"] = hash_string(canonical.str());
    manifest["version"] = "0.1.0";
    std::ofstream os(dir / "run_manifest.json");
    if (!os) throw DomainError("cannot write run manifest");
    os << manifest.dump(2) << '\n';
}

fs::path resolve_output_dir(const json& config, const std::string& flag) {
    if (!flag.empty()) return flag;
    if (config.contains("output_dir")) return config["output_dir"].get<std::string>();
    if (const char* env = std::getenv("MFCAST_OUTPUT_DIR")) return env;
    return "mfcast_out";
}

void apply_override(json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like key.path=value: " + assignment);
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    json* node = &config;
    std::istringstream ps(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ps, part, '.')) parts.push_back(part);
    if (parts.empty()) throw ConfigError("empty override path");
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::exception&) {
        parsed = value;  // plain string
    }
    (*node)[parts.back()] = parsed;
}

// ---------------------------------------------------------------------------
// Subcommands.

int cmd_simulate(const json& config, const fs::path& out) {
    const DgpConfig dgp = parse_dgp(config.at("dgp"));
    const MixedFrequencyDataset ds = gen_dgp(dgp);
    save_dataset(ds, out);
    write_run_manifest(out, "simulate", config);
    return 0;
}

int cmd_align(const json& config, const fs::path& out) {
    const MixedFrequencyDataset ds = load_dataset(config.at("dataset_manifest").get<std::string>());
    const AlignmentSpec spec = parse_alignment(config.at("alignment"));
    const AlignedDesign ad = frequency_align(ds, spec);
    fs::create_directories(out);
    write_aligned_csv(out / "aligned.csv", ad);
    write_run_manifest(out, "align", config);
    return 0;
}

json midas_fit_to_json(const MidasFit& fit) {
    json doc;
    doc["model"] = "midas";
    doc["alpha"] = fit.alpha;
    doc["rss"] = fit.rss;
    doc["sigma2"] = fit.sigma2;
    doc["n_obs"] = fit.n_obs;
    doc["covariates"] = json::array();
    for (const auto& c : fit.covariates) {
        json cj;
        cj["id"] = c.id;
        cj["beta"] = c.beta;
        cj["theta"] = {c.theta.theta1, c.theta.theta2};
        cj["weighting"] =
            c.weighting == Weighting::NormalizedAlmon ? "nealmon" : "almon-nonnorm";
        cj["midas_coef"] = std::vector<double>(c.midas_coef.data(),
                                               c.midas_coef.data() + c.midas_coef.size());
        doc["covariates"].push_back(cj);
    }
    return doc;
}

int cmd_fit(const json& config, const fs::path& out) {
    const MixedFrequencyDataset ds = load_dataset(config.at("dataset_manifest").get<std::string>());
    const std::string model = config.value("model", "midas");
    fs::create_directories(out);
    json result;

    if (model == "ar1") {
        const int horizon = config.value("horizon", 1);
        const Ar1Fit fit = ar1_fit(ds.target.values, horizon);
        result["model"] = "ar1";
        result["intercept"] = fit.intercept;
        result["slope"] = fit.slope;
        result["sigma2"] = fit.sigma2;
        result["horizon"] = fit.horizon;
    } else {
        const AlignmentSpec spec = parse_alignment(config.at("alignment"));
        const AlignedDesign ad = frequency_align(ds, spec);
        if (model == "midas") {
            std::vector<Weighting> w{Weighting::NormalizedAlmon};
            if (config.contains("weighting")) {
                w.clear();
                if (config["weighting"].is_string()) {
                    w.push_back(parse_weighting(config["weighting"].get<std::string>()));
                } else {
                    for (const auto& s : config["weighting"])
                        w.push_back(parse_weighting(s.get<std::string>()));
                }
            }
            RandomSeed seed{config.value("seed", std::uint64_t{0})};
            result = midas_fit_to_json(midas_fit(ad, w, seed));
        } else if (model == "umidas") {
            const UMidasFit fit = umidas_fit(ad);
            result["model"] = "umidas";
            result["alpha"] = fit.alpha;
            result["rss"] = fit.rss;
            result["sigma2"] = fit.sigma2;
            result["n_obs"] = fit.n_obs;
            result["coef"] = std::vector<double>(fit.coef.data(), fit.coef.data() + fit.coef.size());
            json cols = json::array();
            for (const auto& c : fit.columns)
                cols.push_back({{"series", c.series_id}, {"lag", c.lag}, {"ar", c.is_ar}});
            result["columns"] = cols;
        } else {
            throw ConfigError("fit.model must be midas, umidas or ar1");
        }
    }
    std::ofstream os(out / "fit.json");
    os << result.dump(2) << '\n';
    write_run_manifest(out, "fit", config);
    return 0;
}

MixedFrequencyDataset dataset_from_config(const json& config) {
    if (config.contains("dataset_manifest"))
        return load_dataset(config["dataset_manifest"].get<std::string>());
    if (config.contains("dgp")) return gen_dgp(parse_dgp(config["dgp"]));
    throw ConfigError("config needs 'dataset_manifest' or 'dgp'");
}

int cmd_forecast(const json& config, const fs::path& out, int jobs) {
    (void)jobs;
    fs::create_directories(out);
    const std::string mode = config.value("mode", "rolling");

    if (mode == "rolling") {
        const MixedFrequencyDataset ds = dataset_from_config(config);
        const EstimatorSpec spec = parse_estimator(config.at("estimator"));
        const int h_m = config.value("h_m", 1);
        const double split = config.value("split", 0.6);
        RandomSeed seed{config.value("seed", std::uint64_t{0})};
        const RollingOutcome run = rolling_forecast(spec, ds, h_m, split, seed);
        write_forecasts_csv(out / (spec.name + "_forecasts.csv"), run.records);
        write_run_manifest(out, "forecast", config);
        return 0;
    }
    if (mode != "recursive") throw ConfigError("forecast.mode must be 'rolling' or 'recursive'");

    const MixedFrequencyDataset ds = dataset_from_config(config);
    RecursiveConfig rc;
    if (config.contains("horizons")) rc.horizons = config["horizons"].get<std::vector<int>>();
    rc.oos_start = config.value("oos_start", 0);
    if (config.contains("delays")) {
        const json& d = config["delays"];
        rc.delays.monthly = d.value("monthly", 0);
        rc.delays.quarterly = d.value("quarterly", 0);
        rc.delays.target = d.value("target", 0);
    }
    if (config.contains("always_include"))
        for (const auto& id : config["always_include"])
            rc.always_include.insert(id.get<std::string>());
    rc.always_include_from = config.value("always_include_from", 0);
    rc.max_epochs = config.value("max_epochs", 200);
    rc.early_stop_patience = config.value("early_stop_patience", 5);
    rc.seed.value = config.value("seed", std::uint64_t{0});

    std::vector<RecursiveModelConfig> models;
    for (const auto& mj : config.at("models")) {
        RecursiveModelConfig mc;
        const std::string kind = mj.at("kind").get<std::string>();
        if (kind == "fa-lstm") {
            mc.kind = RecursiveKind::FaLstm;
        } else if (kind == "sa-lstm") {
            mc.kind = RecursiveKind::SaLstm;
        } else if (kind == "uni-lstm") {
            mc.kind = RecursiveKind::UniLstm;
        } else if (kind == "ar1") {
            mc.kind = RecursiveKind::Ar1;
        } else {
            throw ConfigError("unknown recursive model kind '" + kind + "'");
        }
        mc.name = mj.value("name", kind);
        if (mj.contains("grid")) mc.grid = parse_grid(mj["grid"]);
        mc.tuning_estimations = mj.value("tuning_estimations", mc.tuning_estimations);
        mc.final_estimations = mj.value("final_estimations", mc.final_estimations);
        mc.tuning_split = mj.value("tuning_split", mc.tuning_split);
        mc.use_lasso = mj.value("use_lasso", mc.use_lasso);
        mc.lasso_folds = mj.value("lasso_folds", mc.lasso_folds);
        mc.lasso_n_lambda = mj.value("lasso_n_lambda", mc.lasso_n_lambda);
        models.push_back(std::move(mc));
    }

    const RecursiveResult result = recursive_forecast(ds, models, rc);
    for (const auto& [name, records] : result.forecasts)
        write_forecasts_csv(out / (name + "_forecasts.csv"), records);

    json selections = json::array();
    for (const auto& ev : result.selections) {
        json e;
        e["model"] = ev.model;
        e["h_m"] = ev.h_m;
        e["target"] = ev.target;
        e["selected"] = ev.selected;
        e["lambda"] = ev.lambda;
        e["chosen"] = ev.chosen.str();
        selections.push_back(e);
    }
    json side;
    side["selections"] = selections;
    side["warnings"] = result.warnings;
    std::ofstream os(out / "selections.json");
    os << side.dump(2) << '\n';
    write_run_manifest(out, "forecast", config);
    return 0;
}

int cmd_gridsearch(const json& config, const fs::path& out) {
    fs::create_directories(out);
    const HyperGrid grid = parse_grid(config.at("grid"));
    const EstimatorSpec base = parse_estimator(config.at("estimator"));
    const int h_m = config.value("h_m", 1);
    const double split = config.value("split", 0.6);
    const int repeats = config.value("repeats", 1);
    RandomSeed seed{config.value("seed", std::uint64_t{0})};

    // Repeats map to tuning replications for DGP configs, or to seeded
    // re-estimations for a fixed dataset.
    std::optional<DgpConfig> dgp;
    MixedFrequencyDataset fixed;
    if (config.contains("dgp")) {
        dgp = parse_dgp(config["dgp"]);
    } else {
        fixed = dataset_from_config(config);
    }

    auto evaluate = [&](const HyperChoice& choice, int repeat, RandomSeed run_seed) {
        EstimatorSpec spec = base;
        spec.hyper = choice;
        if (choice.timesteps > 0) spec.timesteps = choice.timesteps;
        if (choice.p_m > 0) spec.lags = LagSpec{0, choice.p_m - 1};
        MixedFrequencyDataset ds;
        if (dgp) {
            DgpConfig cfg = *dgp;
            cfg.seed = subseed(seed, "tuning-rep", static_cast<std::uint64_t>(repeat));
            ds = gen_dgp(cfg);
        } else {
            ds = fixed;
        }
        const RollingOutcome run = rolling_forecast(spec, ds, h_m, split, run_seed);
        return rmsfe(run.records);
    };
    auto params = [&](const HyperChoice& choice) {
        long features = 1;
        if (base.kind == EstimatorSpec::Kind::SaLstm) {
            features = dgp ? dgp->K : static_cast<long>(fixed.covariates.size());
        } else {
            const long lag_width = choice.p_m > 0 ? choice.p_m : base.lags.width();
            features = (dgp ? dgp->K : static_cast<long>(fixed.covariates.size())) * lag_width;
        }
        long total = 0;
        long in = features;
        for (int c : choice.cells) {
            total += 4L * c * (in + c + 1);
            in = c;
        }
        return total + in + 1;
    };

    const GridSearchResult result = grid_search(grid, config.value("input_size_hint", 0), repeats,
                                                seed, evaluate, params);

    std::ofstream table(out / "scores.csv");
    table << "grid_index,epochs,dropout,batch,cells,timesteps,p_m,p_q,mean_rmsfe,n_fail\n";
    for (const auto& row : result.table) {
        std::string cells;
        for (std::size_t i = 0; i < row.choice.cells.size(); ++i)
            cells += (i ? "|" : "") + std::to_string(row.choice.cells[i]);
        table << row.choice.grid_index << ',' << row.choice.epochs << ',' << row.choice.dropout
              << ',' << row.choice.batch.str() << ',' << cells << ',' << row.choice.timesteps
              << ',' << row.choice.p_m << ',' << row.choice.p_q << ','
              << format_double(row.mean_rmsfe) << ',' << row.n_fail << '\n';
    }

    json best;
    best["epochs"] = result.best.epochs;
    best["dropout"] = result.best.dropout;
    best["batch"] = result.best.batch.str();
    best["cells"] = result.best.cells;
    best["timesteps"] = result.best.timesteps;
    best["p_m"] = result.best.p_m;
    best["p_q"] = result.best.p_q;
    best["grid_index"] = result.best.grid_index;
    std::ofstream os(out / "choice.json");
    os << best.dump(2) << '\n';
    write_run_manifest(out, "gridsearch", config);
    return 0;
}

int cmd_montecarlo(const json& config, const fs::path& out, int jobs) {
    fs::create_directories(out);
    McExperiment exp;
    exp.dgp = parse_dgp(config.at("dgp"));
    if (config.contains("horizons")) exp.horizons = config["horizons"].get<std::vector<int>>();
    for (const auto& e : config.at("roster")) exp.roster.push_back(parse_estimator(e));
    exp.replications = config.value("replications", 50);
    exp.estimations_per_rep = config.value("estimations_per_rep", 2);
    exp.split = config.value("split", 0.6);
    exp.tuning_reps = config.value("tuning_reps", 20);
    exp.dm_benchmark = config.value("dm_benchmark", std::string("MIDAS"));
    exp.seed.value = config.value("seed", std::uint64_t{0});
    exp.jobs = jobs;

    const McTable table = run_monte_carlo(exp);

    std::ofstream os(out / "results.csv");
    os << "estimator,h_m,T,mean_rmsfe,sd,n_fail,dm_vs_midas_p\n";
    for (const auto& row : table.rows)
        os << row.estimator << ',' << row.h_m << ',' << row.T << ','
           << format_double(row.mean_rmsfe) << ',' << format_double(row.sd_rmsfe) << ','
           << row.n_fail << ',' << format_double(row.dm_p) << '\n';

    json meta;
    meta["notes"] = table.notes;
    json stats = json::array();
    for (const auto& row : table.rows)
        stats.push_back({{"estimator", row.estimator},
                         {"h_m", row.h_m},
                         {"dm_stat", std::isnan(row.dm_stat) ? json() : json(row.dm_stat)}});
    meta["dm_statistics"] = stats;
    std::ofstream ms(out / "metadata.json");
    ms << meta.dump(2) << '\n';
    write_run_manifest(out, "montecarlo", config);
    return 0;
}

int cmd_evaluate(const json& config, const fs::path& out) {
    fs::create_directories(out);
    std::vector<std::pair<std::string, std::vector<ForecastRecord>>> records;
    for (const auto& f : config.at("forecasts")) {
        records.emplace_back(f.at("model").get<std::string>(),
                             read_forecasts_csv(f.at("file").get<std::string>()));
    }
    std::vector<std::string> benchmarks;
    if (config.contains("benchmarks"))
        benchmarks = config["benchmarks"].get<std::vector<std::string>>();

    const EvaluationReport report = evaluate_models(records, benchmarks);

    std::ofstream os(out / "evaluation.csv");
    os << "model,h_m,group,n,rmsfe,rel_mse";
    for (const auto& b : benchmarks) os << ",rel_rmsfe_vs_" << b << ",dm_stat_vs_" << b
                                        << ",dm_p_vs_" << b;
    os << '\n';
    for (const auto& row : report.rows) {
        os << row.model << ',' << row.h_m << ',' << row.horizon_group << ',' << row.n_forecasts
           << ',' << format_double(row.rmsfe) << ',' << format_double(row.rel_mse);
        for (std::size_t b = 0; b < row.benchmark.size(); ++b)
            os << ',' << format_double(row.rel_rmsfe[b]) << ',' << format_double(row.dm_stat[b])
               << ',' << format_double(row.dm_p[b]);
        os << '\n';
    }

    json doc = json::array();
    for (const auto& row : report.rows) {
        json r;
        r["model"] = row.model;
        r["h_m"] = row.h_m;
        r["group"] = row.horizon_group;
        r["n"] = row.n_forecasts;
        r["rmsfe"] = row.rmsfe;
        r["rel_mse"] = std::isnan(row.rel_mse) ? json() : json(row.rel_mse);
        json vs = json::object();
        for (std::size_t b = 0; b < row.benchmark.size(); ++b) {
            json cmp;
            cmp["rel_rmsfe"] = std::isnan(row.rel_rmsfe[b]) ? json() : json(row.rel_rmsfe[b]);
            cmp["dm_stat"] = std::isnan(row.dm_stat[b]) ? json() : json(row.dm_stat[b]);
            cmp["dm_p"] = std::isnan(row.dm_p[b]) ? json() : json(row.dm_p[b]);
            vs[row.benchmark[b]] = cmp;
        }
        r["vs"] = vs;
        doc.push_back(r);
    }
    std::ofstream js(out / "evaluation.json");
    js << doc.dump(2) << '\n';
    write_run_manifest(out, "evaluate", config);
    return 0;
}

int cmd_report(const json& config, const fs::path& out) {
    fs::create_directories(out);
    const auto bench = read_forecasts_csv(config.at("benchmark_file").get<std::string>());
    const auto model = read_forecasts_csv(config.at("model_file").get<std::string>());
    const int h_m = config.value("h_m", 1);

    std::vector<double> be, me;
    std::vector<int> targets;
    for (const auto& b : bench) {
        if (b.h_m != h_m) continue;
        for (const auto& m : model) {
            if (m.h_m != h_m || m.target != b.target) continue;
            be.push_back(b.error());
            me.push_back(m.error());
            targets.push_back(b.target);
        }
    }
    if (be.empty()) throw DomainError("report: no overlapping forecasts at h_m=" +
                                      std::to_string(h_m));
    const std::vector<double> series = cumsfe(be, me);

    std::ofstream os(out / "cumsfe.csv");
    os << "x,y\n";
    for (std::size_t i = 0; i < series.size(); ++i)
        os << targets[i] << ',' << format_double(series[i]) << '\n';
    write_run_manifest(out, "report", config);
    return 0;
}

// ---------------------------------------------------------------------------

const Schema& schema_for(const std::string& subcommand) {
    static std::map<std::string, Schema> schemas = [] {
        std::map<std::string, Schema> m;
        m["simulate"] = Schema{{"dgp", dgp_schema()}, {"output_dir", leaf()}};
        m["align"] = Schema{{"dataset_manifest", leaf()},
                            {"alignment", alignment_schema()},
                            {"output_dir", leaf()}};
        m["fit"] = Schema{{"dataset_manifest", leaf()}, {"alignment", alignment_schema()},
                          {"model", leaf()},            {"weighting", any_schema()},
                          {"horizon", leaf()},          {"seed", leaf()},
                          {"output_dir", leaf()}};
        Schema forecast{{"mode", leaf()},
                        {"dataset_manifest", leaf()},
                        {"dgp", dgp_schema()},
                        {"estimator", estimator_schema()},
                        {"h_m", leaf()},
                        {"split", leaf()},
                        {"seed", leaf()},
                        {"horizons", leaf()},
                        {"oos_start", leaf()},
                        {"delays", Schema{{"monthly", leaf()}, {"quarterly", leaf()},
                                          {"target", leaf()}}},
                        {"always_include", leaf()},
                        {"always_include_from", leaf()},
                        {"max_epochs", leaf()},
                        {"early_stop_patience", leaf()},
                        {"models", leaf()},
                        {"output_dir", leaf()}};
        Schema rec_model{{"kind", leaf()},
                         {"name", leaf()},
                         {"grid", hyper_grid_schema()},
                         {"tuning_estimations", leaf()},
                         {"final_estimations", leaf()},
                         {"tuning_split", leaf()},
                         {"use_lasso", leaf()},
                         {"lasso_folds", leaf()},
                         {"lasso_n_lambda", leaf()}};
        forecast.keys["models"].items = &stored("rec-model", rec_model);
        m["forecast"] = forecast;
        m["gridsearch"] = Schema{{"dataset_manifest", leaf()}, {"dgp", dgp_schema()},
                                 {"estimator", estimator_schema()}, {"grid", hyper_grid_schema()},
                                 {"h_m", leaf()},              {"split", leaf()},
                                 {"repeats", leaf()},          {"seed", leaf()},
                                 {"input_size_hint", leaf()},  {"output_dir", leaf()}};
        Schema montecarlo{{"dgp", dgp_schema()},
                          {"horizons", leaf()},
                          {"roster", leaf()},
                          {"replications", leaf()},
                          {"estimations_per_rep", leaf()},
                          {"split", leaf()},
                          {"tuning_reps", leaf()},
                          {"dm_benchmark", leaf()},
                          {"seed", leaf()},
                          {"output_dir", leaf()}};
        montecarlo.keys["roster"].items = &stored("mc-estimator", estimator_schema());
        m["montecarlo"] = montecarlo;
        Schema evaluate{{"forecasts", leaf()}, {"benchmarks", leaf()}, {"output_dir", leaf()}};
        evaluate.keys["forecasts"].items =
            &stored("eval-forecast", Schema{{"model", leaf()}, {"file", leaf()}});
        m["evaluate"] = evaluate;
        m["report"] = Schema{{"benchmark_file", leaf()},
                             {"model_file", leaf()},
                             {"h_m", leaf()},
                             {"output_dir", leaf()}};
        return m;
    }();
    auto it = schemas.find(subcommand);
    if (it == schemas.end()) throw ConfigError("unknown subcommand '" + subcommand + "'");
    return it->second;
}

}  // namespace

int run(const std::string& subcommand, const std::string& config_path,
        const std::vector<std::string>& overrides, const std::string& output_dir, int jobs) {
    json config;
    try {
        std::ifstream is(config_path);
        if (!is) throw ConfigError("cannot open config " + config_path);
        try {
            is >> config;
        } catch (const json::exception& e) {
            throw ConfigError("config parse error: " + std::string(e.what()));
        }
        for (const auto& o : overrides) apply_override(config, o);
        check_schema(config, schema_for(subcommand), "");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    try {
        const fs::path out = resolve_output_dir(config, output_dir);
        if (subcommand == "simulate") return cmd_simulate(config, out);
        if (subcommand == "align") return cmd_align(config, out);
        if (subcommand == "fit") return cmd_fit(config, out);
        if (subcommand == "forecast") return cmd_forecast(config, out, jobs);
        if (subcommand == "gridsearch") return cmd_gridsearch(config, out);
        if (subcommand == "montecarlo") return cmd_montecarlo(config, out, jobs);
        if (subcommand == "evaluate") return cmd_evaluate(config, out);
        if (subcommand == "report") return cmd_report(config, out);
        std::cerr << "unknown subcommand '" << subcommand << "'\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace mfcast::cli
