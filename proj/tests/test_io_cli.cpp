#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mfcast/cli.hpp"
#include "mfcast/io.hpp"
#include "mfcast/recursive.hpp"
#include "mfcast/simulation.hpp"

using namespace mfcast;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("mfcast_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream os(p);
    os << content;
}

}  // namespace

TEST_CASE("dataset CSV and manifest round trip") {
    const fs::path dir = temp_dir("roundtrip");
    DgpConfig cfg;
    cfg.T = 24;
    cfg.seed = RandomSeed{3};
    const MixedFrequencyDataset ds = gen_dgp(cfg);
    save_dataset(ds, dir);

    const MixedFrequencyDataset loaded = load_dataset(dir / "manifest.json");
    CHECK(loaded.target.id == ds.target.id);
    REQUIRE(loaded.covariates.size() == ds.covariates.size());
    for (int t = 1; t <= ds.periods(); ++t)
        CHECK(loaded.target.at(t) == doctest::Approx(ds.target.at(t)).epsilon(1e-9));
    for (std::size_t k = 0; k < ds.covariates.size(); ++k) {
        CHECK(loaded.covariates[k].ratio == ds.covariates[k].ratio);
        for (int i = 1; i <= ds.covariates[k].length(); ++i)
            CHECK(loaded.covariates[k].at(i) ==
                  doctest::Approx(ds.covariates[k].at(i)).epsilon(1e-9));
    }
}

TEST_CASE("missing cells load as masks; leading zeros imputable") {
    const fs::path dir = temp_dir("missing");
    write_file(dir / "q.csv", "t,y\n1,1.0\n2,2.0\n3,3.0\n4,4.0\n");
    write_file(dir / "m.csv",
               "t,x1\n1,\n2,\n3,0.3\n4,0.4\n5,0.5\n6,0.6\n7,0.7\n8,0.8\n9,0.9\n10,1.0\n11,1.1\n12,1.2\n");
    write_file(dir / "manifest.json", R"({
      "target": {"id": "y", "file": "q.csv"},
      "covariates": [{"id": "x1", "ratio": 3, "file": "m.csv"}]
    })");
    const MixedFrequencyDataset masked = load_dataset(dir / "manifest.json");
    CHECK(masked.covariates[0].is_missing(1));
    CHECK(masked.covariates[0].is_missing(2));
    CHECK(!masked.covariates[0].is_missing(3));

    write_file(dir / "manifest2.json", R"({
      "target": {"id": "y", "file": "q.csv"},
      "covariates": [{"id": "x1", "ratio": 3, "file": "m.csv"}],
      "impute_leading_zeros": true
    })");
    const MixedFrequencyDataset imputed = load_dataset(dir / "manifest2.json");
    CHECK(!imputed.covariates[0].is_missing(1));
    CHECK(imputed.covariates[0].at(1) == 0.0);
    CHECK(imputed.covariates[0].at(2) == 0.0);
    CHECK(imputed.covariates[0].at(3) == doctest::Approx(0.3));
}

TEST_CASE("forecast records CSV round trip") {
    const fs::path dir = temp_dir("forecasts");
    std::vector<ForecastRecord> records{{30, 31, 1, 0.52, 0.61}, {31, 32, 1, -0.1, 0.2}};
    write_forecasts_csv(dir / "f.csv", records);
    const auto loaded = read_forecasts_csv(dir / "f.csv");
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].origin == 30);
    CHECK(loaded[0].target == 31);
    CHECK(loaded[0].forecast == doctest::Approx(0.52));
    CHECK(loaded[1].actual == doctest::Approx(0.2));
}

TEST_CASE("cli simulate is byte-identical across reruns") {
    const fs::path dir = temp_dir("cli_sim");
    const fs::path config = dir / "sim.json";
    write_file(config, R"({
      "dgp": {"T": 24, "m": 3, "K": 2, "J": 5, "beta": 0.5,
               "theta": [[0.7, -0.5], [0.7, -0.1]], "seed": 42},
      "output_dir": ")" + (dir / "out").string() + R"("
    })");

    CHECK(cli::run("simulate", config.string(), {}) == 0);
    const std::string a1 = read_file(dir / "out" / "freq_m1.csv");
    const std::string a3 = read_file(dir / "out" / "freq_m3.csv");
    const std::string am = read_file(dir / "out" / "run_manifest.json");
    fs::remove_all(dir / "out");
    CHECK(cli::run("simulate", config.string(), {}) == 0);
    CHECK(read_file(dir / "out" / "freq_m1.csv") == a1);
    CHECK(read_file(dir / "out" / "freq_m3.csv") == a3);
    CHECK(read_file(dir / "out" / "run_manifest.json") == am);
}

TEST_CASE("cli rejects unknown config keys with exit code 2") {
    const fs::path dir = temp_dir("cli_schema");
    const fs::path config = dir / "bad.json";
    write_file(config, R"({"dgp": {"T": 24}, "outpt_dir": "typo"})");
    CHECK(cli::run("simulate", config.string(), {}) == 2);

    write_file(config, R"({"dgp": {"T": 24, "bogus_knob": 1}})");
    CHECK(cli::run("simulate", config.string(), {}) == 2);
}

TEST_CASE("cli align writes the aligned design with validity flags") {
    const fs::path dir = temp_dir("cli_align");
    write_file(dir / "sim.json", R"({
      "dgp": {"T": 20, "m": 3, "K": 1, "J": 3, "seed": 9},
      "output_dir": ")" + (dir / "data").string() + R"("
    })");
    REQUIRE(cli::run("simulate", (dir / "sim.json").string(), {}) == 0);

    write_file(dir / "align.json", R"({
      "dataset_manifest": ")" + (dir / "data" / "manifest.json").string() + R"(",
      "alignment": {"covariates": [{"id": "x1", "lags": {"j_min": 0, "j_max": 4}, "horizon": 1}]},
      "output_dir": ")" + (dir / "out").string() + R"("
    })");
    REQUIRE(cli::run("align", (dir / "align.json").string(), {}) == 0);

    std::ifstream is(dir / "out" / "aligned.csv");
    std::string header, row1;
    std::getline(is, header);
    std::getline(is, row1);
    CHECK(header == "t,valid,y,x1_l0,x1_l1,x1_l2,x1_l3,x1_l4");
    CHECK(row1.substr(0, 4) == "1,0,");  // first row invalid at horizon 1, lag 4
}

TEST_CASE("cli overrides apply to dotted paths") {
    const fs::path dir = temp_dir("cli_override");
    write_file(dir / "sim.json", R"({
      "dgp": {"T": 24, "seed": 1},
      "output_dir": ")" + (dir / "a").string() + R"("
    })");
    REQUIRE(cli::run("simulate", (dir / "sim.json").string(), {"dgp.seed=2"},
                     (dir / "b").string()) == 0);
    REQUIRE(cli::run("simulate", (dir / "sim.json").string(), {}) == 0);
    CHECK(read_file(dir / "a" / "freq_m1.csv") != read_file(dir / "b" / "freq_m1.csv"));
}

TEST_CASE("cli fit/forecast/evaluate/report pipeline runs end to end") {
    const fs::path dir = temp_dir("cli_pipeline");
    write_file(dir / "sim.json", R"({
      "dgp": {"T": 40, "m": 3, "K": 2, "J": 5, "beta": 0.6, "seed": 11},
      "output_dir": ")" + (dir / "data").string() + R"("
    })");
    REQUIRE(cli::run("simulate", (dir / "sim.json").string(), {}) == 0);
    const std::string manifest = (dir / "data" / "manifest.json").string();

    write_file(dir / "fit.json", R"({
      "dataset_manifest": ")" + manifest + R"(",
      "alignment": {"covariates": [
        {"id": "x1", "lags": {"j_min": 0, "j_max": 5}, "horizon": 1},
        {"id": "x2", "lags": {"j_min": 0, "j_max": 5}, "horizon": 1}]},
      "model": "midas", "weighting": "nealmon", "seed": 4,
      "output_dir": ")" + (dir / "fit_out").string() + R"("
    })");
    REQUIRE(cli::run("fit", (dir / "fit.json").string(), {}) == 0);
    CHECK(fs::exists(dir / "fit_out" / "fit.json"));

    write_file(dir / "fc_a.json", R"({
      "mode": "rolling",
      "dataset_manifest": ")" + manifest + R"(",
      "estimator": {"kind": "fa-lstm", "name": "fa", "timesteps": 1,
                    "lags": {"j_min": 0, "j_max": 2},
                    "hyper": {"epochs": 5, "batch": 8, "cells": 4}},
      "h_m": 1, "split": 0.6, "seed": 21,
      "output_dir": ")" + (dir / "fa_out").string() + R"("
    })");
    REQUIRE(cli::run("forecast", (dir / "fc_a.json").string(), {}) == 0);

    write_file(dir / "fc_b.json", R"({
      "mode": "rolling",
      "dataset_manifest": ")" + manifest + R"(",
      "estimator": {"kind": "umidas", "name": "um",
                    "midas": {"covariates": [0, 1], "lag_count": 3}},
      "h_m": 1, "split": 0.6, "seed": 22,
      "output_dir": ")" + (dir / "um_out").string() + R"("
    })");
    REQUIRE(cli::run("forecast", (dir / "fc_b.json").string(), {}) == 0);

    write_file(dir / "eval.json", R"({
      "forecasts": [
        {"model": "fa", "file": ")" + (dir / "fa_out" / "fa_forecasts.csv").string() + R"("},
        {"model": "um", "file": ")" + (dir / "um_out" / "um_forecasts.csv").string() + R"("}],
      "benchmarks": ["um"],
      "output_dir": ")" + (dir / "eval_out").string() + R"("
    })");
    REQUIRE(cli::run("evaluate", (dir / "eval.json").string(), {}) == 0);
    CHECK(fs::exists(dir / "eval_out" / "evaluation.csv"));
    CHECK(fs::exists(dir / "eval_out" / "evaluation.json"));

    write_file(dir / "report.json", R"({
      "benchmark_file": ")" + (dir / "um_out" / "um_forecasts.csv").string() + R"(",
      "model_file": ")" + (dir / "fa_out" / "fa_forecasts.csv").string() + R"(",
      "h_m": 1,
      "output_dir": ")" + (dir / "report_out").string() + R"("
    })");
    REQUIRE(cli::run("report", (dir / "report.json").string(), {}) == 0);
    std::ifstream rep(dir / "report_out" / "cumsfe.csv");
    std::string line;
    std::getline(rep, line);
    CHECK(line == "x,y");
}

TEST_CASE("cli montecarlo writes the documented result schema deterministically") {
    const fs::path dir = temp_dir("cli_mc");
    write_file(dir / "mc.json", R"({
      "dgp": {"T": 30, "m": 3, "K": 2, "J": 3, "beta": 0.5, "seed": 33},
      "horizons": [1],
      "roster": [
        {"kind": "planted", "name": "stub-a", "planted_error": 0.5},
        {"kind": "planted", "name": "stub-b", "planted_error": 1.0}],
      "replications": 3, "estimations_per_rep": 1,
      "dm_benchmark": "stub-a", "seed": 12,
      "output_dir": ")" + (dir / "out").string() + R"("
    })");
    REQUIRE(cli::run("montecarlo", (dir / "mc.json").string(), {}) == 0);
    std::ifstream is(dir / "out" / "results.csv");
    std::string header;
    std::getline(is, header);
    CHECK(header == "estimator,h_m,T,mean_rmsfe,sd,n_fail,dm_vs_midas_p");

    const std::string first = read_file(dir / "out" / "results.csv");
    fs::remove_all(dir / "out");
    REQUIRE(cli::run("montecarlo", (dir / "mc.json").string(), {}) == 0);
    CHECK(read_file(dir / "out" / "results.csv") == first);
}

TEST_CASE("recursive pipeline honors always-include and produces records") {
    // small synthetic mixed dataset: 1 quarterly covariate + 3 monthly
    Rng rng(5);
    MixedFrequencyDataset ds;
    ds.target.id = "y";
    ds.target.ratio = 1;
    const int n = 40;
    std::vector<double> m1(3 * n), m2(3 * n), m3(3 * n), q1(n);
    for (auto& v : m1) v = rng.normal();
    for (auto& v : m2) v = rng.normal();
    for (auto& v : m3) v = rng.normal();
    for (auto& v : q1) v = rng.normal();
    for (int t = 1; t <= n; ++t) {
        const double signal = 0.8 * m1[3 * t - 1] + 0.5 * m1[3 * t - 2] + 0.6 * q1[t - 1];
        ds.target.values.push_back(signal + 0.3 * rng.normal());
    }
    auto add = [&ds](const std::string& id, int ratio, std::vector<double> v) {
        Series s;
        s.id = id;
        s.ratio = ratio;
        s.values = std::move(v);
        ds.covariates.push_back(std::move(s));
    };
    add("m1", 3, m1);
    add("m2", 3, m2);
    add("m3", 3, m3);
    add("q1", 1, q1);

    RecursiveModelConfig fa;
    fa.name = "fa";
    fa.kind = RecursiveKind::FaLstm;
    fa.grid.epochs = {40};
    fa.grid.batch = {BatchSpec::frac(0.5)};
    fa.grid.cells = {{4}};
    fa.grid.timesteps = {1};
    fa.grid.monthly_lags = {3};
    fa.grid.quarterly_lags = {1};
    fa.tuning_estimations = 1;
    fa.final_estimations = 1;
    fa.lasso_folds = 4;
    fa.lasso_n_lambda = 20;

    RecursiveModelConfig ar;
    ar.name = "ar1";
    ar.kind = RecursiveKind::Ar1;

    RecursiveConfig cfg;
    cfg.horizons = {1, 6};
    cfg.oos_start = 36;
    cfg.always_include = {"m3"};
    cfg.always_include_from = 38;
    cfg.max_epochs = 40;
    cfg.early_stop_patience = 3;
    cfg.seed = RandomSeed{77};

    const RecursiveResult result = recursive_forecast(ds, {fa, ar}, cfg);
    REQUIRE(result.forecasts.count("fa") == 1);
    REQUIRE(result.forecasts.count("ar1") == 1);
    CHECK(result.forecasts.at("fa").size() == 10);   // 5 targets x 2 horizons
    CHECK(result.forecasts.at("ar1").size() == 10);

    // forced variable appears in every selection from period 38 on
    int checked = 0;
    for (const auto& ev : result.selections) {
        if (ev.model != "fa" || ev.target < 38) continue;
        bool has = false;
        for (const auto& id : ev.selected) has = has || id == "m3";
        CHECK(has);
        ++checked;
    }
    CHECK(checked > 0);
}
