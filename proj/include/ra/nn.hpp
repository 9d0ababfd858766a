#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ra/rng.hpp"

namespace ra::nn {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Named view over one parameter matrix/vector; the unit Adam, checkpoint I/O
// and finite-difference harness all walk these.
template <class S>
struct ParamBlock {
    std::string name;
    Mat<S>* mat = nullptr;
    Vec<S>* vec = nullptr;

    S* data() const { return mat ? mat->data() : vec->data(); }
    Eigen::Index size() const { return mat ? mat->size() : vec->size(); }
    Eigen::Index rows() const { return mat ? mat->rows() : vec->size(); }
    Eigen::Index cols() const { return mat ? mat->cols() : 1; }
};

template <class S>
struct Linear {
    Mat<S> W;
    Vec<S> b;

    void init(int out, int in, Rng& rng) {
        W.resize(out, in);
        b.setZero(out);
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        for (Eigen::Index i = 0; i < W.size(); ++i)
            W.data()[i] = static_cast<S>(rng.uniform_range(-bound, bound));
    }
    void zero_like(const Linear& other) {
        W.setZero(other.W.rows(), other.W.cols());
        b.setZero(other.b.size());
    }
};

// Gated recurrent cell:
//   z = sigmoid(Wz x + Uz h + bz)
//   r = sigmoid(Wr x + Ur h + br)
//   n = tanh(Wn x + Un (r .* h) + bn)
//   h' = (1 - z) .* n + z .* h
template <class S>
struct GruCell {
    Mat<S> Wz, Uz, Wr, Ur, Wn, Un;
    Vec<S> bz, br, bn;

    int hidden_size() const { return static_cast<int>(bz.size()); }

    void init(int hidden, int in, Rng& rng) {
        auto im = [&](Mat<S>& m, int r, int c) {
            m.resize(r, c);
            const double bound = 1.0 / std::sqrt(static_cast<double>(c));
            for (Eigen::Index i = 0; i < m.size(); ++i)
                m.data()[i] = static_cast<S>(rng.uniform_range(-bound, bound));
        };
        im(Wz, hidden, in);
        im(Uz, hidden, hidden);
        im(Wr, hidden, in);
        im(Ur, hidden, hidden);
        im(Wn, hidden, in);
        im(Un, hidden, hidden);
        bz.setZero(hidden);
        br.setZero(hidden);
        bn.setZero(hidden);
    }
    void zero_like(const GruCell& o) {
        Wz.setZero(o.Wz.rows(), o.Wz.cols());
        Uz.setZero(o.Uz.rows(), o.Uz.cols());
        Wr.setZero(o.Wr.rows(), o.Wr.cols());
        Ur.setZero(o.Ur.rows(), o.Ur.cols());
        Wn.setZero(o.Wn.rows(), o.Wn.cols());
        Un.setZero(o.Un.rows(), o.Un.cols());
        bz.setZero(o.bz.size());
        br.setZero(o.br.size());
        bn.setZero(o.bn.size());
    }
};

struct QNetworkConfig {
    int input_width = 1;
    int num_actions = 2; // M + 1
    bool recurrent = false;
    int dense1_units = 256;
    int hidden_units = 64;

    bool operator==(const QNetworkConfig&) const = default;
};

// Shared Q-network: dense1 (tanh) -> [GRU | dense2 (tanh)] -> linear head.
// The same struct doubles as a gradient buffer via zero_like().
template <class S>
struct QNetwork {
    QNetworkConfig cfg;
    Linear<S> dense1;
    GruCell<S> gru;
    Linear<S> dense2;
    Linear<S> head;

    void init(const QNetworkConfig& c, Rng& rng) {
        cfg = c;
        dense1.init(c.dense1_units, c.input_width, rng);
        if (c.recurrent)
            gru.init(c.hidden_units, c.dense1_units, rng);
        else
            dense2.init(c.hidden_units, c.dense1_units, rng);
        head.init(c.num_actions, c.hidden_units, rng);
    }

    void zero_like(const QNetwork& o) {
        cfg = o.cfg;
        dense1.zero_like(o.dense1);
        if (cfg.recurrent)
            gru.zero_like(o.gru);
        else
            dense2.zero_like(o.dense2);
        head.zero_like(o.head);
    }

    void set_zero() {
        auto bs = const_cast<QNetwork*>(this)->blocks();
        for (auto& b : bs) {
            if (b.mat) b.mat->setZero();
            if (b.vec) b.vec->setZero();
        }
    }

    std::vector<ParamBlock<S>> blocks() {
        std::vector<ParamBlock<S>> v;
        v.push_back({"dense1.W", &dense1.W, nullptr});
        v.push_back({"dense1.b", nullptr, &dense1.b});
        if (cfg.recurrent) {
            v.push_back({"gru.Wz", &gru.Wz, nullptr});
            v.push_back({"gru.Uz", &gru.Uz, nullptr});
            v.push_back({"gru.bz", nullptr, &gru.bz});
            v.push_back({"gru.Wr", &gru.Wr, nullptr});
            v.push_back({"gru.Ur", &gru.Ur, nullptr});
            v.push_back({"gru.br", nullptr, &gru.br});
            v.push_back({"gru.Wn", &gru.Wn, nullptr});
            v.push_back({"gru.Un", &gru.Un, nullptr});
            v.push_back({"gru.bn", nullptr, &gru.bn});
        } else {
            v.push_back({"dense2.W", &dense2.W, nullptr});
            v.push_back({"dense2.b", nullptr, &dense2.b});
        }
        v.push_back({"head.W", &head.W, nullptr});
        v.push_back({"head.b", nullptr, &head.b});
        return v;
    }

    // Accumulate: this += other (same shapes).
    void add(const QNetwork& other) {
        auto a = blocks();
        auto b = const_cast<QNetwork&>(other).blocks();
        for (size_t i = 0; i < a.size(); ++i) {
            if (a[i].mat)
                *a[i].mat += *b[i].mat;
            else
                *a[i].vec += *b[i].vec;
        }
    }
};

// Per-call scratch holding every intermediate the backward pass needs.
template <class S>
struct ForwardCache {
    Vec<S> x;   // input
    Vec<S> a1;  // tanh(dense1)
    Vec<S> a2;  // tanh(dense2) or GRU output
    // GRU internals
    Vec<S> h_prev, gz, gr, gn;
};

template <class S>
void gru_step(const GruCell<S>& g, const Vec<S>& x, const Vec<S>& h_prev,
              Vec<S>& gz, Vec<S>& gr, Vec<S>& gn, Vec<S>& h_out) {
    gz.noalias() = g.Wz * x;
    gz.noalias() += g.Uz * h_prev;
    gz += g.bz;
    gz = ((gz.array() * S(-1)).exp() + S(1)).inverse().matrix(); // sigmoid
    gr.noalias() = g.Wr * x;
    gr.noalias() += g.Ur * h_prev;
    gr += g.br;
    gr = ((gr.array() * S(-1)).exp() + S(1)).inverse().matrix();
    gn.noalias() = g.Wn * x;
    gn.noalias() += g.Un * (gr.cwiseProduct(h_prev));
    gn += g.bn;
    gn = gn.array().tanh().matrix();
    h_out = (Vec<S>::Ones(gn.size()) - gz).cwiseProduct(gn) + gz.cwiseProduct(h_prev);
}

// Single forward step. For recurrent networks `hidden` carries the GRU state
// and is advanced in place; non-recurrent networks ignore it.
template <class S>
void forward(const QNetwork<S>& net, const Vec<S>& obs, Vec<S>& hidden,
             Vec<S>& q_out, ForwardCache<S>* cache = nullptr) {
    if (obs.size() != net.cfg.input_width)
        throw std::invalid_argument("observation width mismatch: got " +
                                    std::to_string(obs.size()) + ", expected " +
                                    std::to_string(net.cfg.input_width));
    Vec<S> a1 = net.dense1.W * obs + net.dense1.b;
    a1 = a1.array().tanh().matrix();
    Vec<S> a2;
    if (net.cfg.recurrent) {
        Vec<S> gz, gr, gn;
        gru_step(net.gru, a1, hidden, gz, gr, gn, a2);
        if (cache) {
            cache->h_prev = hidden;
            cache->gz = gz;
            cache->gr = gr;
            cache->gn = gn;
        }
        hidden = a2;
    } else {
        a2 = net.dense2.W * a1 + net.dense2.b;
        a2 = a2.array().tanh().matrix();
    }
    q_out = net.head.W * a2 + net.head.b;
    if (cache) {
        cache->x = obs;
        cache->a1 = a1;
        cache->a2 = a2;
    }
}

template <class S>
Vec<S> zero_hidden(const QNetwork<S>& net) {
    return Vec<S>::Zero(net.cfg.recurrent ? net.cfg.hidden_units : 0);
}

// Backward through one non-recurrent forward step; accumulates into `grads`.
template <class S>
void backward_step(const QNetwork<S>& net, const ForwardCache<S>& c,
                   const Vec<S>& dq, QNetwork<S>& grads) {
    grads.head.W.noalias() += dq * c.a2.transpose();
    grads.head.b += dq;
    Vec<S> da2 = net.head.W.transpose() * dq;
    Vec<S> dz2 = da2.cwiseProduct(
        (Vec<S>::Ones(c.a2.size()) - c.a2.cwiseProduct(c.a2)));
    grads.dense2.W.noalias() += dz2 * c.a1.transpose();
    grads.dense2.b += dz2;
    Vec<S> da1 = net.dense2.W.transpose() * dz2;
    Vec<S> dz1 = da1.cwiseProduct(
        (Vec<S>::Ones(c.a1.size()) - c.a1.cwiseProduct(c.a1)));
    grads.dense1.W.noalias() += dz1 * c.x.transpose();
    grads.dense1.b += dz1;
}

// Backward through one recurrent step. `dh` is dL/dh_t on entry (loss term
// plus anything flowing back from step t+1) and dL/dh_{t-1} on exit.
template <class S>
void backward_step_recurrent(const QNetwork<S>& net, const ForwardCache<S>& c,
                             const Vec<S>& dq, Vec<S>& dh, QNetwork<S>& grads) {
    grads.head.W.noalias() += dq * c.a2.transpose();
    grads.head.b += dq;
    dh += net.head.W.transpose() * dq;

    const auto& g = net.gru;
    const Vec<S> ones = Vec<S>::Ones(dh.size());
    Vec<S> dn = dh.cwiseProduct(ones - c.gz);
    Vec<S> dz = dh.cwiseProduct(c.h_prev - c.gn);
    Vec<S> dh_prev = dh.cwiseProduct(c.gz);

    Vec<S> dzn = dn.cwiseProduct(ones - c.gn.cwiseProduct(c.gn));
    grads.gru.Wn.noalias() += dzn * c.a1.transpose();
    grads.gru.Un.noalias() += dzn * (c.gr.cwiseProduct(c.h_prev)).transpose();
    grads.gru.bn += dzn;
    Vec<S> drh = g.Un.transpose() * dzn;
    Vec<S> dr = drh.cwiseProduct(c.h_prev);
    dh_prev += drh.cwiseProduct(c.gr);

    Vec<S> dzr = dr.cwiseProduct(c.gr).cwiseProduct(ones - c.gr);
    grads.gru.Wr.noalias() += dzr * c.a1.transpose();
    grads.gru.Ur.noalias() += dzr * c.h_prev.transpose();
    grads.gru.br += dzr;
    dh_prev += g.Ur.transpose() * dzr;

    Vec<S> dzz = dz.cwiseProduct(c.gz).cwiseProduct(ones - c.gz);
    grads.gru.Wz.noalias() += dzz * c.a1.transpose();
    grads.gru.Uz.noalias() += dzz * c.h_prev.transpose();
    grads.gru.bz += dzz;
    dh_prev += g.Uz.transpose() * dzz;

    Vec<S> da1 = g.Wn.transpose() * dzn;
    da1.noalias() += g.Wr.transpose() * dzr;
    da1.noalias() += g.Wz.transpose() * dzz;
    Vec<S> dz1 =
        da1.cwiseProduct(Vec<S>::Ones(c.a1.size()) - c.a1.cwiseProduct(c.a1));
    grads.dense1.W.noalias() += dz1 * c.x.transpose();
    grads.dense1.b += dz1;

    dh = dh_prev;
}

// First-order optimizer with per-parameter moment accumulators (Adam).
template <class S>
class AdamOpt {
public:
    explicit AdamOpt(double lr = 1e-4, double beta1 = 0.9, double beta2 = 0.999,
                     double eps = 1e-8)
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

    double learning_rate() const { return lr_; }
    long long steps() const { return t_; }

    void step(std::vector<ParamBlock<S>> params, std::vector<ParamBlock<S>> grads) {
        if (params.size() != grads.size())
            throw std::invalid_argument("optimizer param/grad block mismatch");
        if (m_.empty()) {
            for (auto& p : params) {
                m_.emplace_back(Vec<S>::Zero(p.size()));
                v_.emplace_back(Vec<S>::Zero(p.size()));
            }
        }
        ++t_;
        const S c1 = static_cast<S>(1.0 - std::pow(b1_, static_cast<double>(t_)));
        const S c2 = static_cast<S>(1.0 - std::pow(b2_, static_cast<double>(t_)));
        for (size_t i = 0; i < params.size(); ++i) {
            if (params[i].size() != grads[i].size() || params[i].size() != m_[i].size())
                throw std::invalid_argument("optimizer block shape drift");
            S* p = params[i].data();
            const S* g = grads[i].data();
            S* m = m_[i].data();
            S* v = v_[i].data();
            const S lr = static_cast<S>(lr_), b1 = static_cast<S>(b1_),
                    b2 = static_cast<S>(b2_), eps = static_cast<S>(eps_);
            for (Eigen::Index j = 0; j < params[i].size(); ++j) {
                m[j] = b1 * m[j] + (S(1) - b1) * g[j];
                v[j] = b2 * v[j] + (S(1) - b2) * g[j] * g[j];
                const S mhat = m[j] / c1;
                const S vhat = v[j] / c2;
                p[j] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }

private:
    double lr_, b1_, b2_, eps_;
    long long t_ = 0;
    std::vector<Vec<S>> m_, v_;
};

// --- checkpoint container ------------------------------------------------
//
// Byte layout (little-endian):
//   8 bytes  magic "RAQCKPT1"
//   u32      format version (1)
//   u32      metadata length, followed by that many bytes of JSON
//   u32      block count
//   per block:
//     u16    name length, followed by the name bytes
//     u8     scalar width in bytes (4 = float, 8 = double)
//     u32    rows, u32 cols
//     raw    rows*cols scalars, Eigen (column-major) order
// Round-trips are bit-exact.

void write_checkpoint_file(const std::string& path, const std::string& meta_json,
                           const std::vector<ParamBlock<float>>& blocks);
void write_checkpoint_file(const std::string& path, const std::string& meta_json,
                           const std::vector<ParamBlock<double>>& blocks);

struct LoadedBlock {
    std::string name;
    int scalar_width = 4;
    Eigen::Index rows = 0, cols = 0;
    std::vector<double> values; // widened for uniform access
};

struct LoadedCheckpoint {
    std::string meta_json;
    std::vector<LoadedBlock> blocks;

    const LoadedBlock& find(const std::string& name) const;
};

LoadedCheckpoint read_checkpoint_file(const std::string& path);

// Copies loaded values into the destination blocks, validating names/shapes.
template <class S>
void assign_blocks(const LoadedCheckpoint& ck, std::vector<ParamBlock<S>> dst) {
    for (auto& b : dst) {
        const LoadedBlock& src = ck.find(b.name);
        if (src.rows != b.rows() || src.cols != b.cols())
            throw std::runtime_error("checkpoint block shape mismatch for " + b.name);
        S* out = b.data();
        for (size_t i = 0; i < src.values.size(); ++i)
            out[i] = static_cast<S>(src.values[i]);
    }
}

} // namespace ra::nn
