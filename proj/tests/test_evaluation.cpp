#include <doctest.h>

#include <cmath>

#include "mfcast/evaluation.hpp"
#include "mfcast/rng.hpp"

using namespace mfcast;

namespace {

std::vector<ForecastRecord> records_from_errors(const std::vector<double>& errors, int h_m = 1) {
    std::vector<ForecastRecord> out;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        ForecastRecord r;
        r.origin = static_cast<int>(i) + 10;
        r.target = r.origin + 1;
        r.h_m = h_m;
        r.actual = static_cast<double>(i);  // varied actuals
        r.forecast = r.actual - errors[i];
        out.push_back(r);
    }
    return out;
}

}  // namespace

TEST_CASE("rmsfe closed forms") {
    CHECK(rmsfe(records_from_errors({0, 0, 0})) == 0.0);
    CHECK(rmsfe(std::vector<double>{3, 4}) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-14));
    CHECK_THROWS_AS(rmsfe(std::vector<double>{}), DomainError);
}

TEST_CASE("rmsfe squared times n equals the squared-error sum") {
    Rng rng(1);
    std::vector<double> errors(17);
    for (auto& e : errors) e = rng.normal();
    double ss = 0;
    for (double e : errors) ss += e * e;
    const double r = rmsfe(errors);
    CHECK(r * r * errors.size() == doctest::Approx(ss).epsilon(1e-12));
}

TEST_CASE("relative_mse uses the population variance of the actuals") {
    const std::vector<double> y{1.0, 3.0, 5.0, 7.0};
    // population variance = mean((y - 4)^2) = (9+1+1+9)/4 = 5
    std::vector<ForecastRecord> recs;
    for (int i = 0; i < 4; ++i) {
        ForecastRecord r;
        r.actual = y[i];
        r.forecast = y[i] - 2.0;  // constant error 2 -> MSE 4
        r.h_m = 1;
        recs.push_back(r);
    }
    CHECK(relative_mse(recs, y) == doctest::Approx(4.0 / 5.0).epsilon(1e-12));
    CHECK_THROWS_AS(relative_mse(recs, std::vector<double>{2, 2, 2}), DomainError);
}

TEST_CASE("dm test rejects degenerate comparisons") {
    const std::vector<double> e{0.5, -1.0, 2.0, 0.1, -0.4};
    CHECK_THROWS_AS(dm_test(e, e, 1), DegenerateComparisonError);
    CHECK_THROWS_AS(dm_test({1, 2, 3, 4}, {2, 2, 2, 2}, 1), DomainError);  // n < 5
}

TEST_CASE("dm test is antisymmetric under model swap") {
    Rng rng(2);
    std::vector<double> a(12), b(12);
    for (int i = 0; i < 12; ++i) {
        a[i] = rng.normal();
        b[i] = rng.normal() * 1.3;
    }
    const DmResult ab = dm_test(a, b, 2);
    const DmResult ba = dm_test(b, a, 2);
    CHECK(ab.statistic == -ba.statistic);
    CHECK(ab.p_value == ba.p_value);
    CHECK(ab.p_value > 0.0);
    CHECK(ab.p_value <= 1.0);
}

TEST_CASE("dm test matches a hand-computed oracle") {
    const std::vector<double> a{1, 2, 3, 4, 5};
    const std::vector<double> b{2, 2, 2, 2, 2};
    // d_t = a^2 - b^2 = {-3, 0, 5, 12, 21}; mean 7
    // gamma_0 = ((-10)^2 + (-7)^2 + (-2)^2 + 5^2 + 14^2)/5 = (100+49+4+25+196)/5 = 74.8
    const double mean = 7.0;
    const double gamma0 = 74.8;
    const double stat = mean / std::sqrt(gamma0 / 5.0);
    const DmResult dm = dm_test(a, b, 1);
    CHECK(dm.statistic == doctest::Approx(stat).epsilon(1e-12));
    CHECK(dm.p_value ==
          doctest::Approx(2.0 * (1.0 - normal_cdf(std::abs(stat)))).epsilon(1e-12));
}

TEST_CASE("dm long-run variance adds autocovariances; falls back when negative") {
    // strongly alternating differential: lag-1 autocovariance is negative
    std::vector<double> a, b;
    for (int i = 0; i < 12; ++i) {
        a.push_back(i % 2 == 0 ? 2.0 : 0.5);
        b.push_back(1.0);
    }
    const DmResult h2 = dm_test(a, b, 2);
    CHECK(h2.variance_fallback);
    const DmResult h1 = dm_test(a, b, 1);
    CHECK(h1.statistic == doctest::Approx(h2.statistic).epsilon(1e-12));

    // smooth differential: no fallback, variance grows, |stat| shrinks
    Rng rng(3);
    std::vector<double> c(40), d(40);
    double level = 1.0;
    for (int i = 0; i < 40; ++i) {
        level = 0.9 * level + 0.3 * rng.normal();
        c[i] = 1.0 + level;
        d[i] = 1.0;
    }
    const DmResult s1 = dm_test(c, d, 1);
    const DmResult s3 = dm_test(c, d, 3);
    CHECK(!s3.variance_fallback);
    CHECK(std::abs(s3.statistic) < std::abs(s1.statistic));
}

TEST_CASE("cumsfe hand cases and identities") {
    CHECK(cumsfe({1, 1, 1}, {1, 1, 1}) == std::vector<double>{0, 0, 0});

    const std::vector<double> series = cumsfe({1, 1}, {0, 2});
    REQUIRE(series.size() == 2);
    CHECK(series[0] == doctest::Approx(1.0));
    CHECK(series[1] == doctest::Approx(-2.0));

    Rng rng(4);
    std::vector<double> bench(15), model(15);
    for (int i = 0; i < 15; ++i) {
        bench[i] = rng.normal();
        model[i] = rng.normal();
    }
    const auto full = cumsfe(bench, model);
    const double msfe_bench = rmsfe(bench) * rmsfe(bench);
    const double msfe_model = rmsfe(model) * rmsfe(model);
    CHECK(full.back() == doctest::Approx(15.0 * (msfe_bench - msfe_model)).epsilon(1e-12));

    // additivity over concatenated windows
    std::vector<double> b1(bench.begin(), bench.begin() + 7), b2(bench.begin() + 7, bench.end());
    std::vector<double> m1(model.begin(), model.begin() + 7), m2(model.begin() + 7, model.end());
    const auto part1 = cumsfe(b1, m1);
    const auto part2 = cumsfe(b2, m2);
    CHECK(part1.back() + part2.back() == doctest::Approx(full.back()).epsilon(1e-12));
}

TEST_CASE("annualize level-compounding cases") {
    const std::vector<double> flat_base{100, 100, 100, 100};
    CHECK(annualize({0, 0, 0, 0}, {}, flat_base) == doctest::Approx(0.0).epsilon(1e-12));

    // four known actuals reproduce the actual annual growth
    const std::vector<double> base{100, 102, 104, 106};
    const std::vector<double> levels{108, 110, 111, 115};
    std::vector<double> growth;
    double prev = base.back();
    for (double l : levels) {
        growth.push_back(100.0 * (l - prev) / prev);
        prev = l;
    }
    const double expected =
        100.0 * ((108 + 110 + 111 + 115) / (100.0 + 102 + 104 + 106) - 1.0);
    CHECK(annualize(growth, {}, base) == doctest::Approx(expected).epsilon(1e-10));

    // two actuals plus two forecasts against a spreadsheet-style oracle
    const std::vector<double> actuals{growth[0], growth[1]};
    const std::vector<double> forecasts{2.0, -1.0};
    double lvl = base.back();
    double total = 0;
    for (double g : {growth[0], growth[1], 2.0, -1.0}) {
        lvl *= 1.0 + g / 100.0;
        total += lvl;
    }
    const double oracle = 100.0 * (total / (100.0 + 102 + 104 + 106) - 1.0);
    CHECK(annualize(actuals, forecasts, base) == doctest::Approx(oracle).epsilon(1e-10));

    CHECK_THROWS_AS(annualize({0, 0, 0}, {}, flat_base), ShapeError);
    CHECK_THROWS_AS(annualize({0, 0, 0, 0}, {}, {100, 100, 100, -5}), DomainError);
}

TEST_CASE("evaluation report: self-comparison is exactly one") {
    Rng rng(5);
    std::vector<ForecastRecord> recs;
    for (int i = 0; i < 10; ++i) {
        ForecastRecord r;
        r.origin = i;
        r.target = i + 1;
        r.h_m = 1;
        r.actual = rng.normal();
        r.forecast = r.actual + rng.normal();
        recs.push_back(r);
    }
    const EvaluationReport report = evaluate_models({{"m", recs}}, {"m"});
    REQUIRE(report.rows.size() == 1);
    REQUIRE(report.rows[0].rel_rmsfe.size() == 1);
    CHECK(report.rows[0].rel_rmsfe[0] == 1.0);
    CHECK(report.rows[0].horizon_group == "nowcast");
}

TEST_CASE("horizon groups cover nowcast, mid and long") {
    CHECK(horizon_group_label(1, 3) == "nowcast");
    CHECK(horizon_group_label(3, 3) == "nowcast");
    CHECK(horizon_group_label(6, 3) == "mid");
    CHECK(horizon_group_label(9, 3) == "long");
    CHECK(horizon_group_label(12, 3) == "long");
}
