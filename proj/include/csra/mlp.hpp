#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csra/replay.hpp"

namespace csra {

// Action-value network: input(2M) -> hidden(q, ReLU) -> hidden(q, ReLU)
// -> output(2^M, linear). Output i estimates the value of configuration i.
struct Mlp {
    Eigen::MatrixXd w1, w2, w3;
    Eigen::VectorXd b1, b2, b3;

    int inputs() const { return static_cast<int>(w1.cols()); }
    int hidden() const { return static_cast<int>(w1.rows()); }
    int outputs() const { return static_cast<int>(w3.rows()); }

    // Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
    static Mlp init(int inputs, int hidden, int outputs, std::mt19937_64& rng) {
        if (inputs < 1 || hidden < 1 || outputs < 1)
            throw std::invalid_argument("Mlp::init: layer sizes must be positive");
        Mlp net;
        auto fill = [&rng](Eigen::MatrixXd& w, int rows, int cols) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
            std::uniform_real_distribution<double> u(-bound, bound);
            w.resize(rows, cols);
            for (int c = 0; c < cols; ++c)
                for (int r = 0; r < rows; ++r) w(r, c) = u(rng);
        };
        fill(net.w1, hidden, inputs);
        fill(net.w2, hidden, hidden);
        fill(net.w3, outputs, hidden);
        net.b1 = Eigen::VectorXd::Zero(hidden);
        net.b2 = Eigen::VectorXd::Zero(hidden);
        net.b3 = Eigen::VectorXd::Zero(outputs);
        return net;
    }

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const {
        if (x.size() != w1.cols()) throw std::invalid_argument("Mlp::forward: input size mismatch");
        const Eigen::VectorXd h1 = (w1 * x + b1).cwiseMax(0.0);
        const Eigen::VectorXd h2 = (w2 * h1 + b2).cwiseMax(0.0);
        return w3 * h2 + b3;
    }

    long param_count() const {
        return w1.size() + w2.size() + w3.size() + b1.size() + b2.size() + b3.size();
    }

    bool all_finite() const {
        return w1.allFinite() && w2.allFinite() && w3.allFinite() && b1.allFinite() &&
               b2.allFinite() && b3.allFinite();
    }
};

// Gradient (or squared-gradient average) with the network's shapes.
struct MlpGrads {
    Eigen::MatrixXd w1, w2, w3;
    Eigen::VectorXd b1, b2, b3;

    static MlpGrads zeros_like(const Mlp& net) {
        MlpGrads g;
        g.w1 = Eigen::MatrixXd::Zero(net.w1.rows(), net.w1.cols());
        g.w2 = Eigen::MatrixXd::Zero(net.w2.rows(), net.w2.cols());
        g.w3 = Eigen::MatrixXd::Zero(net.w3.rows(), net.w3.cols());
        g.b1 = Eigen::VectorXd::Zero(net.b1.size());
        g.b2 = Eigen::VectorXd::Zero(net.b2.size());
        g.b3 = Eigen::VectorXd::Zero(net.b3.size());
        return g;
    }
};

struct LossAndGrad {
    double loss = 0.0;
    MlpGrads grads;
};

// Mean squared error between each tuple's reward and the network value of
// the configuration that tuple actually chose. Only the chosen output of
// each sample receives gradient; the other 2^M - 1 outputs are untouched
// by that sample, matching the bandit semantics of the reward.
inline LossAndGrad loss_and_grad(const Mlp& net, const std::vector<const ReplayTuple*>& batch) {
    if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
    const auto B = static_cast<Eigen::Index>(batch.size());
    const Eigen::Index in = net.w1.cols();

    Eigen::MatrixXd x(in, B);
    for (Eigen::Index j = 0; j < B; ++j) {
        const ReplayTuple& t = *batch[static_cast<std::size_t>(j)];
        if (t.features.size() != in) throw std::invalid_argument("loss_and_grad: feature size mismatch");
        if (t.action >= static_cast<ConfigIndex>(net.outputs()))
            throw std::invalid_argument("loss_and_grad: action index out of range");
        x.col(j) = t.features;
    }

    const Eigen::MatrixXd z1 = (net.w1 * x).colwise() + net.b1;
    const Eigen::MatrixXd h1 = z1.cwiseMax(0.0);
    const Eigen::MatrixXd z2 = (net.w2 * h1).colwise() + net.b2;
    const Eigen::MatrixXd h2 = z2.cwiseMax(0.0);
    const Eigen::MatrixXd out = (net.w3 * h2).colwise() + net.b3;

    double loss = 0.0;
    Eigen::MatrixXd dout = Eigen::MatrixXd::Zero(out.rows(), B);
    const double inv_b = 1.0 / static_cast<double>(B);
    for (Eigen::Index j = 0; j < B; ++j) {
        const ReplayTuple& t = *batch[static_cast<std::size_t>(j)];
        const double err = out(static_cast<Eigen::Index>(t.action), j) - t.reward;
        loss += err * err * inv_b;
        dout(static_cast<Eigen::Index>(t.action), j) = 2.0 * inv_b * err;
    }

    LossAndGrad lg;
    lg.loss = loss;
    lg.grads.w3.noalias() = dout * h2.transpose();
    lg.grads.b3 = dout.rowwise().sum();
    Eigen::MatrixXd dz2 = (net.w3.transpose() * dout).cwiseProduct(
        (z2.array() > 0.0).cast<double>().matrix());
    lg.grads.w2.noalias() = dz2 * h1.transpose();
    lg.grads.b2 = dz2.rowwise().sum();
    Eigen::MatrixXd dz1 = (net.w2.transpose() * dz2).cwiseProduct(
        (z1.array() > 0.0).cast<double>().matrix());
    lg.grads.w1.noalias() = dz1 * x.transpose();
    lg.grads.b1 = dz1.rowwise().sum();
    return lg;
}

// Per-parameter moving average of squared gradients.
struct RmsPropState {
    MlpGrads sq_avg;
    double decay = 0.9;
    double eps = 1e-8;

    static RmsPropState init(const Mlp& net, double decay = 0.9, double eps = 1e-8) {
        RmsPropState st;
        st.sq_avg = MlpGrads::zeros_like(net);
        st.decay = decay;
        st.eps = eps;
        return st;
    }
};

// E <- decay*E + (1-decay)*g^2;  w <- w - lr * g / (sqrt(E) + eps).
inline void rmsprop_step(Mlp& net, const MlpGrads& grads, RmsPropState& state, double lr) {
    auto apply = [&](auto& w, const auto& g, auto& e) {
        e = state.decay * e.array() + (1.0 - state.decay) * g.array().square();
        w.array() -= lr * g.array() / (e.array().sqrt() + state.eps);
    };
    apply(net.w1, grads.w1, state.sq_avg.w1);
    apply(net.w2, grads.w2, state.sq_avg.w2);
    apply(net.w3, grads.w3, state.sq_avg.w3);
    apply(net.b1, grads.b1, state.sq_avg.b1);
    apply(net.b2, grads.b2, state.sq_avg.b2);
    apply(net.b3, grads.b3, state.sq_avg.b3);
}

// One online training step: sample a mini-batch if the memory is warm,
// otherwise leave the network untouched. Returns the batch loss when a
// step was taken.
inline std::optional<double> train_step(Mlp& net, const ReplayMemory& mem, int batch,
                                        RmsPropState& opt, double lr, std::mt19937_64& rng) {
    auto sample = mem.sample(batch, rng);
    if (!sample) return std::nullopt;
    LossAndGrad lg = loss_and_grad(net, *sample);
    rmsprop_step(net, lg.grads, opt, lr);
    return lg.loss;
}

// ---------------------------------------------------------------------------
// Checkpoint format: versioned text, hexfloat payload for exact round trips.

inline void save_mlp(std::ostream& out, const Mlp& net) {
    out << "csra-mlp 1\n";
    out << net.inputs() << ' ' << net.hidden() << ' ' << net.outputs() << '\n';
    out << std::hexfloat;
    auto dump = [&out](const auto& m) {
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            for (Eigen::Index r = 0; r < m.rows(); ++r) out << m(r, c) << '\n';
    };
    dump(net.w1);
    dump(net.b1);
    dump(net.w2);
    dump(net.b2);
    dump(net.w3);
    dump(net.b3);
}

inline Mlp load_mlp(std::istream& in) {
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "csra-mlp" || version != 1)
        throw std::runtime_error("load_mlp: not a csra-mlp v1 checkpoint");
    int i = 0, h = 0, o = 0;
    in >> i >> h >> o;
    if (!in || i < 1 || h < 1 || o < 1) throw std::runtime_error("load_mlp: bad header");
    Mlp net;
    auto slurp = [&in](Eigen::MatrixXd& m, int rows, int cols) {
        m.resize(rows, cols);
        for (int c = 0; c < cols; ++c)
            for (int r = 0; r < rows; ++r) {
                std::string tok;
                if (!(in >> tok)) throw std::runtime_error("load_mlp: truncated checkpoint");
                m(r, c) = std::strtod(tok.c_str(), nullptr);
            }
    };
    auto slurp_vec = [&slurp](Eigen::VectorXd& v, int rows) {
        Eigen::MatrixXd m;
        slurp(m, rows, 1);
        v = m.col(0);
    };
    slurp(net.w1, h, i);
    slurp_vec(net.b1, h);
    slurp(net.w2, h, h);
    slurp_vec(net.b2, h);
    slurp(net.w3, o, h);
    slurp_vec(net.b3, o);
    return net;
}

}  // namespace csra
