#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "ibcdmp/rng.hpp"

namespace ibcdmp {

enum class Activation { Linear, Relu, ScaledTanh };

struct Layer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;
};

// Fully connected net; every hidden layer uses `hidden`, the last one `output`.
// ScaledTanh maps onto (out_low, out_high).
struct Network {
    std::vector<Layer> layers;
    Activation hidden = Activation::Relu;
    Activation output = Activation::Linear;
    double out_low = -1.0;
    double out_high = 1.0;

    Eigen::Index input_size() const { return layers.front().weight.cols(); }
    Eigen::Index output_size() const { return layers.back().weight.rows(); }
    std::vector<int> sizes() const;
    std::size_t param_count() const;
    /// Layer by layer: weight (column-major), then bias.
    Eigen::VectorXd flatten() const;
    void unflatten(const Eigen::VectorXd& flat);
    bool finite() const;
};

Network make_network(const std::vector<int>& sizes, Activation hidden, Activation output, Rng& rng,
                     double final_scale = 1e-2);
Network make_actor(Rng& rng, double f_min, double f_max);
Network make_critic(Rng& rng);

struct ForwardCache {
    std::vector<Eigen::MatrixXd> pre;   // pre-activation per layer
    std::vector<Eigen::MatrixXd> post;  // post[0] is the input, post[l + 1] the layer-l output
};

/// `input` is in x batch; returns out x batch.
Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& input, ForwardCache* cache = nullptr);

struct Gradients {
    std::vector<Layer> layers;  // empty when parameter gradients were not requested
    Eigen::MatrixXd input;      // in x batch
};

Gradients backward(const Network& net, const ForwardCache& cache, const Eigen::MatrixXd& out_grad,
                   bool want_param_grads = true);

/// Same layout as Network::flatten.
Eigen::VectorXd flatten(const std::vector<Layer>& grads);

enum class OptimizerKind { Adam, Sgd };

struct OptimState {
    OptimizerKind kind = OptimizerKind::Adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long long step = 0;
    Eigen::VectorXd m;
    Eigen::VectorXd v;
};

OptimState make_optim(const Network& net, double lr, OptimizerKind kind = OptimizerKind::Adam);

void optimizer_step(Network& net, const std::vector<Layer>& grads, OptimState& opt);
void optimizer_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, OptimState& opt);

/// target <- lam * target + (1 - lam) * source.
void soft_update(Network& target, const Network& source, double lam);

}  // namespace ibcdmp
