#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "mfcast/alignment.hpp"
#include "mfcast/rng.hpp"

namespace mfcast {

// Weights of one LSTM layer with forget gate. Peephole vectors are diagonal
// cell-state connections; empty when peepholes are disabled.
struct LstmLayerParams {
    Eigen::MatrixXd Wxi, Wxf, Wxc, Wxo;  // cells x inputs
    Eigen::MatrixXd Whi, Whf, Whc, Who;  // cells x cells
    Eigen::VectorXd wci, wcf, wco;       // cells (peepholes) or empty
    Eigen::VectorXd bi, bf, bc, bo;      // cells

    int cells() const { return static_cast<int>(bi.size()); }
    int inputs() const { return static_cast<int>(Wxi.cols()); }
};

struct DenseHead {
    Eigen::VectorXd w;
    double b = 0.0;
};

struct LstmParams {
    std::vector<LstmLayerParams> layers;
    DenseHead head;
    bool peepholes = false;

    int feature_count() const { return layers.empty() ? 0 : layers.front().inputs(); }
    long parameter_count() const;
};

struct TrainConfig {
    int epochs_max = 200;
    int batch_size = 1;
    double dropout_rate = 0.0;             // input connections only
    std::vector<int> cells = {32};
    int early_stop_patience = 0;           // 0 disables early stopping
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
    RandomSeed seed;
    bool peepholes = false;
    bool standardize = true;
};

// Per-feature z-score transform fitted on the training split. Empty vectors
// mean identity.
struct FeatureScaler {
    Eigen::VectorXd mean, sd;

    bool identity() const { return mean.size() == 0; }
    void fit(const TensorBatch& batch);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& seq) const;
};

struct LstmNetwork {
    LstmParams params;
    TrainConfig config;
    FeatureScaler scaler;
    int best_epoch = 0;       // epoch whose parameters were kept
    double best_val_mse = 0;  // validation MSE at that epoch (NaN when none)

    Eigen::VectorXd predict(const TensorBatch& batch) const;
};

struct GateCache {
    Eigen::VectorXd x, i, f, g, o, c, h, c_prev, h_prev;
};

// One LSTM cell update. With peepholes the input/forget gates see c_{t-1} and
// the output gate sees the freshly updated c_t.
void cell_step(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
               const Eigen::VectorXd& c_prev, const LstmLayerParams& p, bool peepholes,
               Eigen::VectorXd& h_out, Eigen::VectorXd& c_out, GateCache* cache = nullptr);

// Sequence-to-one unroll of raw parameters over one sequence (no scaling, no
// dropout).
double forward_sequence(const LstmParams& params, const Eigen::MatrixXd& seq);

// Batch forward pass through a network: scaler, unroll, dense head. Dropout
// is inactive.
Eigen::VectorXd forward(const LstmNetwork& net, const TensorBatch& batch);

// Trains by full backpropagation through time with adaptive-moment updates.
// Seeded shuffling and dropout; with a validation batch and patience > 0,
// stops early and returns the best-validation-epoch parameters.
LstmNetwork train(const TensorBatch& data, const TrainConfig& cfg,
                  const TensorBatch* validation = nullptr);

// Max relative error between analytic BPTT gradients and central finite
// differences over every parameter.
double gradient_check(const LstmParams& params, const TensorBatch& batch, double epsilon);

// MSE loss and analytic gradient at `params` (test/diagnostic entry point).
double lstm_loss(const LstmParams& params, const TensorBatch& batch,
                 LstmParams* gradient = nullptr);

LstmParams init_params(int features, const std::vector<int>& cells, bool peepholes, Rng& rng);

Eigen::VectorXd pack(const LstmParams& params);
void unpack(const Eigen::VectorXd& flat, LstmParams& params);

// Structured-text persistence with a version field.
void save_network(const LstmNetwork& net, std::ostream& os);
LstmNetwork load_network(std::istream& is);
void save_network(const LstmNetwork& net, const std::string& path);
LstmNetwork load_network(const std::string& path);

}  // namespace mfcast
