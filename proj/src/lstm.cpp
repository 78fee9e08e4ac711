#include "mfcast/lstm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "mfcast/errors.hpp"

namespace mfcast {

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& v) {
    return (1.0 / (1.0 + (-v.array()).exp())).matrix();
}

}  // namespace

long LstmParams::parameter_count() const {
    return pack(*this).size();
}

void FeatureScaler::fit(const TensorBatch& batch) {
    const int f = batch.features();
    mean = Eigen::VectorXd::Zero(f);
    sd = Eigen::VectorXd::Ones(f);
    long count = 0;
    for (const auto& seq : batch.sequences) {
        mean += seq.colwise().sum().transpose();
        count += seq.rows();
    }
    if (count == 0) return;
    mean /= static_cast<double>(count);
    Eigen::VectorXd ss = Eigen::VectorXd::Zero(f);
    for (const auto& seq : batch.sequences)
        ss += (seq.rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
    for (int j = 0; j < f; ++j) {
        const double v = ss[j] / static_cast<double>(count);
        sd[j] = v > 1e-24 ? std::sqrt(v) : 1.0;
    }
}

Eigen::MatrixXd FeatureScaler::apply(const Eigen::MatrixXd& seq) const {
    if (identity()) return seq;
    if (seq.cols() != mean.size()) throw ShapeError("scaler: feature count mismatch");
    Eigen::MatrixXd out = seq;
    out.rowwise() -= mean.transpose();
    out.array().rowwise() /= sd.transpose().array();
    return out;
}

void cell_step(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
               const Eigen::VectorXd& c_prev, const LstmLayerParams& p, bool peepholes,
               Eigen::VectorXd& h_out, Eigen::VectorXd& c_out, GateCache* cache) {
    if (x.size() != p.inputs() || h_prev.size() != p.cells() || c_prev.size() != p.cells())
        throw ShapeError("cell_step: dimension mismatch");

    Eigen::VectorXd ai = p.Wxi * x + p.Whi * h_prev + p.bi;
    Eigen::VectorXd af = p.Wxf * x + p.Whf * h_prev + p.bf;
    if (peepholes) {
        ai += p.wci.cwiseProduct(c_prev);
        af += p.wcf.cwiseProduct(c_prev);
    }
    const Eigen::VectorXd i = sigmoid(ai);
    const Eigen::VectorXd f = sigmoid(af);
    const Eigen::VectorXd g = (p.Wxc * x + p.Whc * h_prev + p.bc).array().tanh();
    c_out = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
    Eigen::VectorXd ao = p.Wxo * x + p.Who * h_prev + p.bo;
    if (peepholes) ao += p.wco.cwiseProduct(c_out);
    const Eigen::VectorXd o = sigmoid(ao);
    h_out = o.cwiseProduct(c_out.array().tanh().matrix());

    if (cache) {
        cache->x = x;
        cache->i = i;
        cache->f = f;
        cache->g = g;
        cache->o = o;
        cache->c = c_out;
        cache->h = h_out;
        cache->c_prev = c_prev;
        cache->h_prev = h_prev;
    }
}

namespace {

// Dropout masks for one sequence: one mask per gate per layer, constant
// across timesteps (inverted dropout scaling).
struct DropoutMasks {
    // [layer][gate 0..3 = i,f,c,o]
    std::vector<std::array<Eigen::VectorXd, 4>> gate;
    bool active = false;
};

DropoutMasks sample_masks(const LstmParams& params, double rate, Rng& rng) {
    DropoutMasks masks;
    if (rate <= 0.0) return masks;
    masks.active = true;
    const double scale = 1.0 / (1.0 - rate);
    masks.gate.resize(params.layers.size());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const int in = params.layers[l].inputs();
        for (int g = 0; g < 4; ++g) {
            Eigen::VectorXd m(in);
            for (int j = 0; j < in; ++j) m[j] = rng.uniform01() < rate ? 0.0 : scale;
            masks.gate[l][g] = std::move(m);
        }
    }
    return masks;
}

struct LayerTape {
    std::vector<GateCache> steps;                 // per timestep
    std::vector<std::array<Eigen::VectorXd, 4>> xg;  // masked inputs per gate
};

// Forward pass for one (already scaled) sequence, recording everything needed
// for BPTT. Returns the head output.
double forward_tape(const LstmParams& params, const Eigen::MatrixXd& seq,
                    const DropoutMasks& masks, std::vector<LayerTape>* tapes) {
    const int T = static_cast<int>(seq.rows());
    const std::size_t L = params.layers.size();
    if (L == 0 || T == 0) throw ShapeError("forward: empty network or sequence");
    if (tapes) tapes->assign(L, LayerTape{});

    Eigen::MatrixXd input = seq;
    Eigen::VectorXd h, c;
    for (std::size_t l = 0; l < L; ++l) {
        const LstmLayerParams& p = params.layers[l];
        if (input.cols() != p.inputs()) throw ShapeError("forward: feature count mismatch");
        h = Eigen::VectorXd::Zero(p.cells());
        c = Eigen::VectorXd::Zero(p.cells());
        Eigen::MatrixXd output(T, p.cells());
        for (int t = 0; t < T; ++t) {
            Eigen::VectorXd x = input.row(t).transpose();
            std::array<Eigen::VectorXd, 4> xg;
            if (masks.active) {
                for (int g = 0; g < 4; ++g) xg[g] = x.cwiseProduct(masks.gate[l][g]);
            }
            // Apply per-gate masked inputs by running the gates explicitly.
            Eigen::VectorXd ai, af, ag, ao;
            if (masks.active) {
                ai = p.Wxi * xg[0] + p.Whi * h + p.bi;
                af = p.Wxf * xg[1] + p.Whf * h + p.bf;
                ag = p.Wxc * xg[2] + p.Whc * h + p.bc;
            } else {
                ai = p.Wxi * x + p.Whi * h + p.bi;
                af = p.Wxf * x + p.Whf * h + p.bf;
                ag = p.Wxc * x + p.Whc * h + p.bc;
            }
            if (params.peepholes) {
                ai += p.wci.cwiseProduct(c);
                af += p.wcf.cwiseProduct(c);
            }
            const Eigen::VectorXd i = sigmoid(ai);
            const Eigen::VectorXd f = sigmoid(af);
            const Eigen::VectorXd g = ag.array().tanh();
            const Eigen::VectorXd c_prev = c;
            c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
            if (masks.active) {
                ao = p.Wxo * xg[3] + p.Who * h + p.bo;
            } else {
                ao = p.Wxo * x + p.Who * h + p.bo;
            }
            if (params.peepholes) ao += p.wco.cwiseProduct(c);
            const Eigen::VectorXd o = sigmoid(ao);
            const Eigen::VectorXd h_prev = h;
            h = o.cwiseProduct(c.array().tanh().matrix());
            output.row(t) = h.transpose();

            if (tapes) {
                GateCache gc;
                gc.x = x;
                gc.i = i;
                gc.f = f;
                gc.g = g;
                gc.o = o;
                gc.c = c;
                gc.h = h;
                gc.c_prev = c_prev;
                gc.h_prev = h_prev;
                (*tapes)[l].steps.push_back(std::move(gc));
                if (masks.active) (*tapes)[l].xg.push_back(xg);
            }
        }
        input = std::move(output);
    }
    return params.head.w.dot(h) + params.head.b;
}

struct GradAccum {
    LstmParams g;

    explicit GradAccum(const LstmParams& like) {
        g = like;
        for (auto& l : g.layers) {
            l.Wxi.setZero();
            l.Wxf.setZero();
            l.Wxc.setZero();
            l.Wxo.setZero();
            l.Whi.setZero();
            l.Whf.setZero();
            l.Whc.setZero();
            l.Who.setZero();
            l.bi.setZero();
            l.bf.setZero();
            l.bc.setZero();
            l.bo.setZero();
            if (l.wci.size()) l.wci.setZero();
            if (l.wcf.size()) l.wcf.setZero();
            if (l.wco.size()) l.wco.setZero();
        }
        g.head.w.setZero();
        g.head.b = 0.0;
    }
};

// BPTT over one sequence given d(loss)/d(prediction).
void backward_tape(const LstmParams& params, const std::vector<LayerTape>& tapes,
                   const DropoutMasks& masks, double dpred, LstmParams& grad) {
    const std::size_t L = params.layers.size();
    const int T = static_cast<int>(tapes[0].steps.size());

    grad.head.w += dpred * tapes[L - 1].steps[T - 1].h;
    grad.head.b += dpred;

    // dh per layer per timestep contributed from above (head or upper layer).
    std::vector<std::vector<Eigen::VectorXd>> dh_from_above(L);
    for (std::size_t l = 0; l < L; ++l) {
        dh_from_above[l].assign(T, Eigen::VectorXd::Zero(params.layers[l].cells()));
    }
    dh_from_above[L - 1][T - 1] = dpred * params.head.w;

    for (std::size_t li = L; li-- > 0;) {
        const LstmLayerParams& p = params.layers[li];
        LstmLayerParams& gl = grad.layers[li];
        const LayerTape& tape = tapes[li];
        Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(p.cells());
        Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(p.cells());
        for (int t = T - 1; t >= 0; --t) {
            const GateCache& s = tape.steps[t];
            const Eigen::VectorXd tanh_c = s.c.array().tanh();
            const Eigen::VectorXd dh = dh_from_above[li][t] + dh_next;
            const Eigen::VectorXd dao =
                dh.cwiseProduct(tanh_c).cwiseProduct(s.o).cwiseProduct(
                    (1.0 - s.o.array()).matrix());
            Eigen::VectorXd dc =
                dh.cwiseProduct(s.o).cwiseProduct((1.0 - tanh_c.array().square()).matrix()) +
                dc_next;
            if (params.peepholes) dc += p.wco.cwiseProduct(dao);
            const Eigen::VectorXd daf =
                dc.cwiseProduct(s.c_prev).cwiseProduct(s.f).cwiseProduct(
                    (1.0 - s.f.array()).matrix());
            const Eigen::VectorXd dai =
                dc.cwiseProduct(s.g).cwiseProduct(s.i).cwiseProduct((1.0 - s.i.array()).matrix());
            const Eigen::VectorXd dag =
                dc.cwiseProduct(s.i).cwiseProduct((1.0 - s.g.array().square()).matrix());

            const bool drop = masks.active;
            const Eigen::VectorXd& xi = drop ? tape.xg[t][0] : s.x;
            const Eigen::VectorXd& xf = drop ? tape.xg[t][1] : s.x;
            const Eigen::VectorXd& xc = drop ? tape.xg[t][2] : s.x;
            const Eigen::VectorXd& xo = drop ? tape.xg[t][3] : s.x;
            gl.Wxi += dai * xi.transpose();
            gl.Wxf += daf * xf.transpose();
            gl.Wxc += dag * xc.transpose();
            gl.Wxo += dao * xo.transpose();
            gl.Whi += dai * s.h_prev.transpose();
            gl.Whf += daf * s.h_prev.transpose();
            gl.Whc += dag * s.h_prev.transpose();
            gl.Who += dao * s.h_prev.transpose();
            gl.bi += dai;
            gl.bf += daf;
            gl.bc += dag;
            gl.bo += dao;
            if (params.peepholes) {
                gl.wci += dai.cwiseProduct(s.c_prev);
                gl.wcf += daf.cwiseProduct(s.c_prev);
                gl.wco += dao.cwiseProduct(s.c);
            }

            dh_next = p.Whi.transpose() * dai + p.Whf.transpose() * daf +
                      p.Whc.transpose() * dag + p.Who.transpose() * dao;
            dc_next = dc.cwiseProduct(s.f);
            if (params.peepholes)
                dc_next += p.wci.cwiseProduct(dai) + p.wcf.cwiseProduct(daf);

            if (li > 0) {
                Eigen::VectorXd dx;
                if (drop) {
                    dx = masks.gate[li][0].cwiseProduct(p.Wxi.transpose() * dai) +
                         masks.gate[li][1].cwiseProduct(p.Wxf.transpose() * daf) +
                         masks.gate[li][2].cwiseProduct(p.Wxc.transpose() * dag) +
                         masks.gate[li][3].cwiseProduct(p.Wxo.transpose() * dao);
                } else {
                    dx = p.Wxi.transpose() * dai + p.Wxf.transpose() * daf +
                         p.Wxc.transpose() * dag + p.Wxo.transpose() * dao;
                }
                dh_from_above[li - 1][t] += dx;
            }
        }
    }
}

}  // namespace

double forward_sequence(const LstmParams& params, const Eigen::MatrixXd& seq) {
    DropoutMasks none;
    return forward_tape(params, seq, none, nullptr);
}

Eigen::VectorXd forward(const LstmNetwork& net, const TensorBatch& batch) {
    Eigen::VectorXd out(batch.size());
    for (int s = 0; s < batch.size(); ++s)
        out[s] = forward_sequence(net.params, net.scaler.apply(batch.sequences[s]));
    return out;
}

Eigen::VectorXd LstmNetwork::predict(const TensorBatch& batch) const {
    return forward(*this, batch);
}

double lstm_loss(const LstmParams& params, const TensorBatch& batch, LstmParams* gradient) {
    if (batch.size() == 0) throw DomainError("lstm_loss: empty batch");
    const double inv = 1.0 / batch.size();
    double loss = 0.0;
    DropoutMasks none;
    if (gradient) *gradient = GradAccum(params).g;
    for (int s = 0; s < batch.size(); ++s) {
        std::vector<LayerTape> tapes;
        const double pred = forward_tape(params, batch.sequences[s], none,
                                         gradient ? &tapes : nullptr);
        const double err = pred - batch.targets[s];
        loss += err * err * inv;
        if (gradient) backward_tape(params, tapes, none, 2.0 * err * inv, *gradient);
    }
    return loss;
}

LstmParams init_params(int features, const std::vector<int>& cells, bool peepholes, Rng& rng) {
    if (features < 1 || cells.empty()) throw DomainError("init_params: bad dimensions");

    auto glorot = [&rng](int rows, int cols) {
        const double limit = std::sqrt(6.0 / (rows + cols));
        Eigen::MatrixXd m(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-limit, limit);
        return m;
    };
    auto orthogonal = [&rng](int n) {
        Eigen::MatrixXd a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
        Eigen::MatrixXd q = qr.householderQ();
        const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
        for (int i = 0; i < n; ++i)
            if (r(i, i) < 0) q.col(i) = -q.col(i);
        return q;
    };

    LstmParams params;
    params.peepholes = peepholes;
    int in = features;
    for (int c : cells) {
        if (c < 1) throw DomainError("init_params: cell count must be >= 1");
        LstmLayerParams l;
        l.Wxi = glorot(c, in);
        l.Wxf = glorot(c, in);
        l.Wxc = glorot(c, in);
        l.Wxo = glorot(c, in);
        l.Whi = orthogonal(c);
        l.Whf = orthogonal(c);
        l.Whc = orthogonal(c);
        l.Who = orthogonal(c);
        l.bi = Eigen::VectorXd::Zero(c);
        l.bf = Eigen::VectorXd::Ones(c);  // forget bias 1
        l.bc = Eigen::VectorXd::Zero(c);
        l.bo = Eigen::VectorXd::Zero(c);
        if (peepholes) {
            l.wci = Eigen::VectorXd::Zero(c);
            l.wcf = Eigen::VectorXd::Zero(c);
            l.wco = Eigen::VectorXd::Zero(c);
        }
        params.layers.push_back(std::move(l));
        in = c;
    }
    params.head.w = glorot(cells.back(), 1).col(0);
    params.head.b = 0.0;
    return params;
}

Eigen::VectorXd pack(const LstmParams& params) {
    std::vector<double> flat;
    auto push_m = [&flat](const Eigen::MatrixXd& m) {
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
    };
    auto push_v = [&flat](const Eigen::VectorXd& v) {
        for (int i = 0; i < v.size(); ++i) flat.push_back(v[i]);
    };
    for (const auto& l : params.layers) {
        push_m(l.Wxi);
        push_m(l.Wxf);
        push_m(l.Wxc);
        push_m(l.Wxo);
        push_m(l.Whi);
        push_m(l.Whf);
        push_m(l.Whc);
        push_m(l.Who);
        push_v(l.bi);
        push_v(l.bf);
        push_v(l.bc);
        push_v(l.bo);
        push_v(l.wci);
        push_v(l.wcf);
        push_v(l.wco);
    }
    push_v(params.head.w);
    flat.push_back(params.head.b);
    return Eigen::Map<Eigen::VectorXd>(flat.data(), static_cast<long>(flat.size()));
}

void unpack(const Eigen::VectorXd& flat, LstmParams& params) {
    long pos = 0;
    auto pull_m = [&flat, &pos](Eigen::MatrixXd& m) {
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < m.cols(); ++j) m(i, j) = flat[pos++];
    };
    auto pull_v = [&flat, &pos](Eigen::VectorXd& v) {
        for (int i = 0; i < v.size(); ++i) v[i] = flat[pos++];
    };
    for (auto& l : params.layers) {
        pull_m(l.Wxi);
        pull_m(l.Wxf);
        pull_m(l.Wxc);
        pull_m(l.Wxo);
        pull_m(l.Whi);
        pull_m(l.Whf);
        pull_m(l.Whc);
        pull_m(l.Who);
        pull_v(l.bi);
        pull_v(l.bf);
        pull_v(l.bc);
        pull_v(l.bo);
        pull_v(l.wci);
        pull_v(l.wcf);
        pull_v(l.wco);
    }
    pull_v(params.head.w);
    params.head.b = flat[pos++];
    if (pos != flat.size()) throw ShapeError("unpack: size mismatch");
}

double gradient_check(const LstmParams& params, const TensorBatch& batch, double epsilon) {
    if (params.parameter_count() > 10000)
        throw DomainError("gradient_check: instance too large");
    LstmParams analytic;
    lstm_loss(params, batch, &analytic);
    const Eigen::VectorXd ga = pack(analytic);

    LstmParams work = params;
    Eigen::VectorXd flat = pack(params);
    double max_rel = 0.0;
    for (long j = 0; j < flat.size(); ++j) {
        const double keep = flat[j];
        flat[j] = keep + epsilon;
        unpack(flat, work);
        const double up = lstm_loss(work, batch);
        flat[j] = keep - epsilon;
        unpack(flat, work);
        const double down = lstm_loss(work, batch);
        flat[j] = keep;
        const double gf = (up - down) / (2.0 * epsilon);
        const double rel = std::abs(ga[j] - gf) / std::max(1e-8, std::abs(ga[j]) + std::abs(gf));
        max_rel = std::max(max_rel, rel);
    }
    unpack(flat, work);
    return max_rel;
}

LstmNetwork train(const TensorBatch& data, const TrainConfig& cfg, const TensorBatch* validation) {
    if (data.size() < 2) throw DomainError("train: need at least 2 sequences");
    if (cfg.batch_size < 1) throw DomainError("train: batch_size must be >= 1");
    if (cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0)
        throw DomainError("train: dropout_rate must lie in [0,1)");

    LstmNetwork net;
    net.config = cfg;
    if (cfg.standardize) net.scaler.fit(data);

    std::vector<Eigen::MatrixXd> scaled(data.size());
    for (int s = 0; s < data.size(); ++s) scaled[s] = net.scaler.apply(data.sequences[s]);
    std::vector<Eigen::MatrixXd> val_scaled;
    if (validation) {
        val_scaled.resize(validation->size());
        for (int s = 0; s < validation->size(); ++s)
            val_scaled[s] = net.scaler.apply(validation->sequences[s]);
    }

    Rng init_rng = substream(cfg.seed, "init");
    net.params = init_params(data.features(), cfg.cells, cfg.peepholes, init_rng);

    Eigen::VectorXd flat = pack(net.params);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(flat.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(flat.size());
    long step = 0;

    double best_val = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_flat = flat;
    int best_epoch = 0;
    int bad_epochs = 0;

    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    const DropoutMasks no_masks;
    for (int epoch = 1; epoch <= cfg.epochs_max; ++epoch) {
        Rng shuffle_rng = substream(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch));
        shuffle(order, shuffle_rng);
        Rng dropout_rng = substream(cfg.seed, "dropout", static_cast<std::uint64_t>(epoch));

        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
            const double inv = 1.0 / static_cast<double>(end - begin);
            GradAccum grads(net.params);
            double batch_loss = 0.0;
            for (std::size_t idx = begin; idx < end; ++idx) {
                const int s = order[idx];
                const DropoutMasks masks =
                    cfg.dropout_rate > 0.0
                        ? sample_masks(net.params, cfg.dropout_rate, dropout_rng)
                        : no_masks;
                std::vector<LayerTape> tapes;
                const double pred = forward_tape(net.params, scaled[s], masks, &tapes);
                const double err = pred - data.targets[s];
                batch_loss += err * err * inv;
                backward_tape(net.params, tapes, masks, 2.0 * err * inv, grads.g);
            }
            if (!std::isfinite(batch_loss))
                throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch));

            const Eigen::VectorXd g = pack(grads.g);
            ++step;
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            flat -= (cfg.learning_rate / bc1) *
                    (m.array() / ((v.array() / bc2).sqrt() + cfg.epsilon)).matrix();
            unpack(flat, net.params);
        }

        if (validation && validation->size() > 0) {
            double val_mse = 0.0;
            for (int s = 0; s < validation->size(); ++s) {
                const double pred = forward_tape(net.params, val_scaled[s], no_masks, nullptr);
                const double err = pred - validation->targets[s];
                val_mse += err * err;
            }
            val_mse /= validation->size();
            if (!std::isfinite(val_mse))
                throw DivergenceError("train: non-finite validation loss at epoch " +
                                      std::to_string(epoch));
            if (val_mse < best_val) {
                best_val = val_mse;
                best_flat = flat;
                best_epoch = epoch;
                bad_epochs = 0;
            } else {
                ++bad_epochs;
                if (cfg.early_stop_patience > 0 && bad_epochs >= cfg.early_stop_patience) break;
            }
        }
    }

    if (validation && validation->size() > 0) {
        unpack(best_flat, net.params);
        net.best_epoch = best_epoch;
        net.best_val_mse = best_val;
    } else {
        net.best_epoch = cfg.epochs_max;
        net.best_val_mse = std::numeric_limits<double>::quiet_NaN();
    }
    return net;
}

namespace {

void write_matrix(std::ostream& os, const char* name, const Eigen::MatrixXd& m) {
    os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    os.precision(17);
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
        os << '\n';
    }
}

Eigen::MatrixXd read_matrix(std::istream& is, const std::string& expect) {
    std::string name;
    long rows = 0, cols = 0;
    is >> name >> rows >> cols;
    if (name != expect) throw DomainError("load_network: expected '" + expect + "', got '" + name + "'");
    Eigen::MatrixXd m(rows, cols);
    for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j) is >> m(i, j);
    return m;
}

}  // namespace

void save_network(const LstmNetwork& net, std::ostream& os) {
    os << "mfcast-lstm 1\n";
    const auto& c = net.config;
    os.precision(17);
    os << "config " << c.epochs_max << ' ' << c.batch_size << ' ' << c.dropout_rate << ' '
       << c.early_stop_patience << ' ' << c.learning_rate << ' ' << c.beta1 << ' ' << c.beta2
       << ' ' << c.epsilon << ' ' << c.seed.value << ' ' << (c.peepholes ? 1 : 0) << ' '
       << (c.standardize ? 1 : 0) << '\n';
    os << "cells";
    for (int cc : c.cells) os << ' ' << cc;
    os << '\n';
    os << "peepholes " << (net.params.peepholes ? 1 : 0) << '\n';
    os << "layers " << net.params.layers.size() << '\n';
    for (const auto& l : net.params.layers) {
        write_matrix(os, "Wxi", l.Wxi);
        write_matrix(os, "Wxf", l.Wxf);
        write_matrix(os, "Wxc", l.Wxc);
        write_matrix(os, "Wxo", l.Wxo);
        write_matrix(os, "Whi", l.Whi);
        write_matrix(os, "Whf", l.Whf);
        write_matrix(os, "Whc", l.Whc);
        write_matrix(os, "Who", l.Who);
        write_matrix(os, "bi", l.bi);
        write_matrix(os, "bf", l.bf);
        write_matrix(os, "bc", l.bc);
        write_matrix(os, "bo", l.bo);
        write_matrix(os, "wci", l.wci);
        write_matrix(os, "wcf", l.wcf);
        write_matrix(os, "wco", l.wco);
    }
    write_matrix(os, "head_w", net.params.head.w);
    os << "head_b " << net.params.head.b << '\n';
    write_matrix(os, "scaler_mean", net.scaler.mean);
    write_matrix(os, "scaler_sd", net.scaler.sd);
}

LstmNetwork load_network(std::istream& is) {
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != "mfcast-lstm" || version != 1)
        throw DomainError("load_network: unrecognized format");

    LstmNetwork net;
    std::string tok;
    auto& c = net.config;
    int peep = 0, stand = 0;
    is >> tok >> c.epochs_max >> c.batch_size >> c.dropout_rate >> c.early_stop_patience >>
        c.learning_rate >> c.beta1 >> c.beta2 >> c.epsilon >> c.seed.value >> peep >> stand;
    c.peepholes = peep != 0;
    c.standardize = stand != 0;
    is >> tok;  // "cells"
    c.cells.clear();
    {
        std::string line;
        std::getline(is, line);
        std::istringstream ls(line);
        int v;
        while (ls >> v) c.cells.push_back(v);
    }
    int net_peep = 0;
    std::size_t n_layers = 0;
    is >> tok >> net_peep >> tok >> n_layers;
    net.params.peepholes = net_peep != 0;
    for (std::size_t l = 0; l < n_layers; ++l) {
        LstmLayerParams lp;
        lp.Wxi = read_matrix(is, "Wxi");
        lp.Wxf = read_matrix(is, "Wxf");
        lp.Wxc = read_matrix(is, "Wxc");
        lp.Wxo = read_matrix(is, "Wxo");
        lp.Whi = read_matrix(is, "Whi");
        lp.Whf = read_matrix(is, "Whf");
        lp.Whc = read_matrix(is, "Whc");
        lp.Who = read_matrix(is, "Who");
        lp.bi = read_matrix(is, "bi").col(0);
        lp.bf = read_matrix(is, "bf").col(0);
        lp.bc = read_matrix(is, "bc").col(0);
        lp.bo = read_matrix(is, "bo").col(0);
        auto maybe_col = [&is](const char* name) -> Eigen::VectorXd {
            Eigen::MatrixXd m = read_matrix(is, name);
            if (m.size() == 0) return Eigen::VectorXd();
            return m.col(0);
        };
        lp.wci = maybe_col("wci");
        lp.wcf = maybe_col("wcf");
        lp.wco = maybe_col("wco");
        net.params.layers.push_back(std::move(lp));
    }
    net.params.head.w = read_matrix(is, "head_w").col(0);
    is >> tok >> net.params.head.b;
    auto maybe_vec = [&is](const char* name) -> Eigen::VectorXd {
        Eigen::MatrixXd m = read_matrix(is, name);
        if (m.size() == 0) return Eigen::VectorXd();
        return m.col(0);
    };
    net.scaler.mean = maybe_vec("scaler_mean");
    net.scaler.sd = maybe_vec("scaler_sd");
    return net;
}

void save_network(const LstmNetwork& net, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw DomainError("save_network: cannot open " + path);
    save_network(net, os);
}

LstmNetwork load_network(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DomainError("load_network: cannot open " + path);
    return load_network(is);
}

}  // namespace mfcast
