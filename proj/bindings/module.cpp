#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mfcast/alignment.hpp"
#include "mfcast/almon.hpp"
#include "mfcast/evaluation.hpp"
#include "mfcast/lstm.hpp"
#include "mfcast/midas.hpp"
#include "mfcast/recursive.hpp"
#include "mfcast/selection.hpp"
#include "mfcast/simulation.hpp"

namespace py = pybind11;
using namespace mfcast;

namespace {

MixedFrequencyDataset dataset_from_dict(const std::vector<double>& target,
                                        const py::dict& covariates) {
    MixedFrequencyDataset ds;
    ds.target.id = "y";
    ds.target.ratio = 1;
    ds.target.values = target;
    for (const auto& item : covariates) {
        Series s;
        s.id = py::cast<std::string>(item.first);
        const py::tuple spec = py::cast<py::tuple>(item.second);
        s.ratio = py::cast<int>(spec[0]);
        s.values = py::cast<std::vector<double>>(spec[1]);
        ds.covariates.push_back(std::move(s));
    }
    return ds;
}

AlignmentSpec spec_from_list(const py::list& covariates, py::object ar) {
    AlignmentSpec spec;
    for (const auto& item : covariates) {
        const py::tuple c = py::cast<py::tuple>(item);
        CovariateAlignSpec cs;
        cs.id = py::cast<std::string>(c[0]);
        cs.lags.j_min = py::cast<int>(c[1]);
        cs.lags.j_max = py::cast<int>(c[2]);
        cs.horizon = c.size() > 3 ? py::cast<int>(c[3]) : 0;
        spec.covariates.push_back(std::move(cs));
    }
    if (!ar.is_none()) {
        const py::tuple a = py::cast<py::tuple>(ar);
        spec.ar = ArAlignSpec{LagSpec{py::cast<int>(a[0]), py::cast<int>(a[1])},
                              a.size() > 2 ? py::cast<int>(a[2]) : 1};
    }
    return spec;
}

py::dict design_to_dict(const AlignedDesign& ad) {
    py::dict out;
    out["X"] = ad.X;
    out["y"] = ad.y;
    py::list valid, period, columns;
    for (std::size_t i = 0; i < ad.valid.size(); ++i) {
        valid.append(static_cast<bool>(ad.valid[i]));
        period.append(ad.period[i]);
    }
    for (const auto& c : ad.columns)
        columns.append(py::make_tuple(c.series_id, c.lag, c.is_ar));
    out["valid"] = valid;
    out["period"] = period;
    out["columns"] = columns;
    return out;
}

TensorBatch batch_from_numpy(const py::array_t<double>& x, const std::vector<double>& y) {
    if (x.ndim() != 3) throw ShapeError("expected a 3-D array (batch, timesteps, features)");
    const auto r = x.unchecked<3>();
    TensorBatch batch;
    for (py::ssize_t s = 0; s < r.shape(0); ++s) {
        Eigen::MatrixXd seq(r.shape(1), r.shape(2));
        for (py::ssize_t t = 0; t < r.shape(1); ++t)
            for (py::ssize_t f = 0; f < r.shape(2); ++f) seq(t, f) = r(s, t, f);
        batch.sequences.push_back(std::move(seq));
        batch.targets.push_back(s < static_cast<py::ssize_t>(y.size()) ? y[s] : 0.0);
        batch.target_period.push_back(static_cast<int>(s) + 1);
    }
    return batch;
}

py::array_t<double> batch_to_numpy(const TensorBatch& batch) {
    py::array_t<double> out({batch.size(), batch.timesteps(), batch.features()});
    auto w = out.mutable_unchecked<3>();
    for (int s = 0; s < batch.size(); ++s)
        for (int t = 0; t < batch.timesteps(); ++t)
            for (int f = 0; f < batch.features(); ++f) w(s, t, f) = batch.sequences[s](t, f);
    return out;
}

}  // namespace

PYBIND11_MODULE(_mfcast, m) {
    m.doc() = "mixed-frequency time-series forecasting toolkit";

    py::register_exception<Error>(m, "MfcastError");

    m.def("growth_rate", &growth_rate, py::arg("levels"),
          "Percentage growth rate of a positive level series");

    m.def(
        "almon_weights",
        [](double theta1, double theta2, int J, bool normalized) {
            return almon_weights({theta1, theta2}, J, normalized);
        },
        py::arg("theta1"), py::arg("theta2"), py::arg("J"), py::arg("normalized") = true,
        "Second-order exponential Almon lag weights over positions 1..J");

    m.def(
        "frequency_align",
        [](const std::vector<double>& target, const py::dict& covariates,
           const py::list& spec, py::object ar) {
            const MixedFrequencyDataset ds = dataset_from_dict(target, covariates);
            return design_to_dict(frequency_align(ds, spec_from_list(spec, ar)));
        },
        py::arg("target"), py::arg("covariates"), py::arg("spec"), py::arg("ar") = py::none(),
        "U-MIDAS frequency alignment. covariates: {id: (ratio, values)}; spec: "
        "[(id, j_min, j_max, horizon)]; ar: (j_min, j_max, horizon) or None");

    m.def(
        "sample_align",
        [](const std::vector<double>& target, const py::dict& covariates, int timesteps,
           int horizon, int within_rate) {
            const MixedFrequencyDataset ds = dataset_from_dict(target, covariates);
            const TensorBatch batch = sample_align(ds, timesteps, horizon, within_rate);
            py::dict out;
            out["x"] = batch_to_numpy(batch);
            out["y"] = batch.targets;
            out["target_period"] = batch.target_period;
            return out;
        },
        py::arg("target"), py::arg("covariates"), py::arg("timesteps"), py::arg("horizon") = 0,
        py::arg("within_rate") = 1,
        "Sampling alignment for single-mismatch data; returns a 3-D batch");

    py::class_<UMidasFit>(m, "UMidasFit")
        .def_readonly("alpha", &UMidasFit::alpha)
        .def_readonly("coef", &UMidasFit::coef)
        .def_readonly("rss", &UMidasFit::rss)
        .def_readonly("sigma2", &UMidasFit::sigma2);

    m.def(
        "umidas_fit",
        [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
            AlignedDesign ad;
            ad.X = X;
            ad.y = y;
            ad.valid.assign(X.rows(), 1);
            ad.period.resize(X.rows());
            for (int r = 0; r < X.rows(); ++r) ad.period[r] = r + 1;
            ad.blocks.push_back({"x", 0, static_cast<int>(X.cols()), 0, 1, 0, false});
            for (int c = 0; c < X.cols(); ++c) ad.columns.push_back({"x", c, false});
            return umidas_fit(ad);
        },
        py::arg("X"), py::arg("y"), "Unrestricted MIDAS OLS on a prepared design matrix");

    py::class_<Ar1Fit>(m, "Ar1Fit")
        .def_readonly("intercept", &Ar1Fit::intercept)
        .def_readonly("slope", &Ar1Fit::slope)
        .def_readonly("sigma2", &Ar1Fit::sigma2)
        .def("predict", [](const Ar1Fit& f, double y_lag) { return predict(f, y_lag); });

    m.def("ar1_fit", &ar1_fit, py::arg("y"), py::arg("horizon") = 1);

    py::class_<LstmNetwork>(m, "LstmNetwork")
        .def_property_readonly("best_epoch", [](const LstmNetwork& n) { return n.best_epoch; })
        .def_property_readonly("parameter_count",
                               [](const LstmNetwork& n) { return n.params.parameter_count(); })
        .def(
            "predict",
            [](const LstmNetwork& net, const py::array_t<double>& x) {
                return forward(net, batch_from_numpy(x, {}));
            },
            py::arg("x"), "Forward pass over a 3-D batch (batch, timesteps, features)");

    m.def(
        "lstm_train",
        [](const py::array_t<double>& x, const std::vector<double>& y, int epochs,
           int batch_size, double dropout, const std::vector<int>& cells, int patience,
           std::uint64_t seed, bool peepholes, double validation_split) {
            TensorBatch batch = batch_from_numpy(x, y);
            TrainConfig cfg;
            cfg.epochs_max = epochs;
            cfg.batch_size = batch_size;
            cfg.dropout_rate = dropout;
            cfg.cells = cells;
            cfg.early_stop_patience = patience;
            cfg.seed = RandomSeed{seed};
            cfg.peepholes = peepholes;
            if (validation_split > 0.0) {
                const int n_train = std::max(
                    2, static_cast<int>(std::lround((1.0 - validation_split) * batch.size())));
                TensorBatch tr, va;
                for (int s = 0; s < batch.size(); ++s) {
                    auto& dst = s < n_train ? tr : va;
                    dst.sequences.push_back(batch.sequences[s]);
                    dst.targets.push_back(batch.targets[s]);
                    dst.target_period.push_back(batch.target_period[s]);
                }
                return train(tr, cfg, &va);
            }
            return train(batch, cfg);
        },
        py::arg("x"), py::arg("y"), py::arg("epochs") = 50, py::arg("batch_size") = 1,
        py::arg("dropout") = 0.0, py::arg("cells") = std::vector<int>{32},
        py::arg("patience") = 0, py::arg("seed") = 0, py::arg("peepholes") = false,
        py::arg("validation_split") = 0.0,
        "Train a sequence-to-one LSTM with adaptive-moment updates");

    m.def(
        "lstm_gradient_check",
        [](const py::array_t<double>& x, const std::vector<double>& y,
           const std::vector<int>& cells, bool peepholes, std::uint64_t seed, double eps) {
            TensorBatch batch = batch_from_numpy(x, y);
            Rng rng(seed);
            const LstmParams params =
                init_params(batch.features(), cells, peepholes, rng);
            return gradient_check(params, batch, eps);
        },
        py::arg("x"), py::arg("y"), py::arg("cells") = std::vector<int>{4},
        py::arg("peepholes") = false, py::arg("seed") = 0, py::arg("eps") = 1e-5,
        "Max relative error between BPTT and central finite differences");

    py::class_<LassoFit>(m, "LassoFit")
        .def_readonly("intercept", &LassoFit::intercept)
        .def_readonly("coef", &LassoFit::coef);

    m.def("lasso_fit", &lasso_fit, py::arg("X"), py::arg("y"), py::arg("lambda_"),
          "Coordinate-descent LASSO with unpenalized intercept");

    m.def(
        "dm_test",
        [](const std::vector<double>& ea, const std::vector<double>& eb, int h) {
            const DmResult r = dm_test(ea, eb, h);
            return py::make_tuple(r.statistic, r.p_value);
        },
        py::arg("errors_a"), py::arg("errors_b"), py::arg("h") = 1,
        "Diebold-Mariano test under squared loss; returns (statistic, p)");

    m.def("rmsfe", py::overload_cast<const std::vector<double>&>(&rmsfe), py::arg("errors"));
    m.def("cumsfe", &cumsfe, py::arg("errors_bench"), py::arg("errors_model"));
    m.def("annualize", &annualize, py::arg("quarterly_actuals"), py::arg("quarterly_forecasts"),
          py::arg("base_year_levels"));

    m.def(
        "gen_dgp",
        [](int T, int m, int K, int J, double alpha, const std::vector<double>& beta,
           const std::vector<std::pair<double, double>>& theta, const std::string& x_process,
           double rho, double noise_sd, std::uint64_t seed) {
            DgpConfig cfg;
            cfg.T = T;
            cfg.m = m;
            cfg.K = K;
            cfg.J = J;
            cfg.alpha = alpha;
            cfg.beta = beta;
            for (const auto& [t1, t2] : theta) cfg.theta.push_back({t1, t2});
            cfg.x_process = x_process == "ar1" ? XProcess::Ar1 : XProcess::IidNormal;
            cfg.rho = rho;
            cfg.noise_sd = noise_sd;
            cfg.seed = RandomSeed{seed};
            const DgpDraw draw = gen_dgp_full(cfg);
            py::dict out;
            out["y"] = draw.dataset.target.values;
            py::dict xs;
            for (const auto& s : draw.dataset.covariates)
                xs[py::str(s.id)] = py::make_tuple(s.ratio, s.values);
            out["covariates"] = xs;
            out["conditional_mean"] = draw.conditional_mean;
            return out;
        },
        py::arg("T") = 50, py::arg("m") = 3, py::arg("K") = 3, py::arg("J") = 11,
        py::arg("alpha") = 0.0, py::arg("beta") = std::vector<double>{},
        py::arg("theta") = std::vector<std::pair<double, double>>{},
        py::arg("x_process") = "iid-normal", py::arg("rho") = 0.9, py::arg("noise_sd") = 1.0,
        py::arg("seed") = 0,
        "Draw a restricted-MIDAS data generating process");

    m.attr("__version__") = "0.1.0";
}
