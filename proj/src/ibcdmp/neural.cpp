#include "ibcdmp/neural.hpp"

#include <cmath>
#include <random>

#include "ibcdmp/error.hpp"

namespace ibcdmp {

std::vector<int> Network::sizes() const {
    std::vector<int> out;
    if (layers.empty()) return out;
    out.push_back(static_cast<int>(layers.front().weight.cols()));
    for (const auto& l : layers) out.push_back(static_cast<int>(l.weight.rows()));
    return out;
}

std::size_t Network::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

Eigen::VectorXd Network::flatten() const { return ibcdmp::flatten(layers); }

void Network::unflatten(const Eigen::VectorXd& flat) {
    require(static_cast<std::size_t>(flat.size()) == param_count(), ErrorKind::InvalidArgument,
            "parameter vector does not match the network shape");
    Eigen::Index off = 0;
    for (auto& l : layers) {
        l.weight = Eigen::Map<const Eigen::MatrixXd>(flat.data() + off, l.weight.rows(), l.weight.cols());
        off += l.weight.size();
        l.bias = flat.segment(off, l.bias.size());
        off += l.bias.size();
    }
}

bool Network::finite() const {
    for (const auto& l : layers) {
        if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    }
    return true;
}

Eigen::VectorXd flatten(const std::vector<Layer>& layers) {
    Eigen::Index n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    Eigen::VectorXd flat(n);
    Eigen::Index off = 0;
    for (const auto& l : layers) {
        flat.segment(off, l.weight.size()) = Eigen::Map<const Eigen::VectorXd>(l.weight.data(), l.weight.size());
        off += l.weight.size();
        flat.segment(off, l.bias.size()) = l.bias;
        off += l.bias.size();
    }
    return flat;
}

Network make_network(const std::vector<int>& sizes, Activation hidden, Activation output, Rng& rng,
                     double final_scale) {
    require(sizes.size() >= 2, ErrorKind::InvalidArgument, "network needs at least one layer");
    Network net;
    net.hidden = hidden;
    net.output = output;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        require(sizes[i] > 0 && sizes[i + 1] > 0, ErrorKind::InvalidArgument, "layer sizes must be positive");
        const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[i]));
        std::uniform_real_distribution<double> u(-bound, bound);
        Layer l;
        l.weight.resize(sizes[i + 1], sizes[i]);
        l.bias.resize(sizes[i + 1]);
        for (Eigen::Index k = 0; k < l.weight.size(); ++k) l.weight.data()[k] = u(rng);
        for (Eigen::Index k = 0; k < l.bias.size(); ++k) l.bias[k] = u(rng);
        net.layers.push_back(std::move(l));
    }
    net.layers.back().weight *= final_scale;
    net.layers.back().bias *= final_scale;
    return net;
}

Network make_actor(Rng& rng, double f_min, double f_max) {
    require(f_min < f_max, ErrorKind::InvalidArgument, "actor bounds must satisfy f_min < f_max");
    Network net = make_network({10, 64, 128, 64, 3}, Activation::Relu, Activation::ScaledTanh, rng);
    net.out_low = f_min;
    net.out_high = f_max;
    return net;
}

Network make_critic(Rng& rng) { return make_network({13, 64, 128, 64, 1}, Activation::Relu, Activation::Linear, rng); }

namespace {

void activate(Activation act, const Network& net, const Eigen::MatrixXd& z, Eigen::MatrixXd& out) {
    switch (act) {
        case Activation::Linear:
            out = z;
            break;
        case Activation::Relu:
            out = z.cwiseMax(0.0);
            break;
        case Activation::ScaledTanh: {
            const double mid = 0.5 * (net.out_high + net.out_low);
            const double half = 0.5 * (net.out_high - net.out_low);
            out = (half * z.array().tanh() + mid).matrix();
            break;
        }
    }
}

// dL/dz given dL/da, the pre-activation z and the activation a.
void activate_grad(Activation act, const Network& net, const Eigen::MatrixXd& z, const Eigen::MatrixXd& a,
                   Eigen::MatrixXd& grad) {
    switch (act) {
        case Activation::Linear:
            break;
        case Activation::Relu:
            grad = (z.array() > 0.0).select(grad, 0.0);
            break;
        case Activation::ScaledTanh: {
            const double mid = 0.5 * (net.out_high + net.out_low);
            const double half = 0.5 * (net.out_high - net.out_low);
            // a = mid + half*tanh(z)  =>  da/dz = half * (1 - tanh^2)
            const Eigen::ArrayXXd t = (a.array() - mid) / half;
            grad = (grad.array() * half * (1.0 - t.square())).matrix();
            break;
        }
    }
}

}  // namespace

Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& input, ForwardCache* cache) {
    require(!net.layers.empty(), ErrorKind::InvalidArgument, "empty network");
    require(input.rows() == net.input_size(), ErrorKind::InvalidArgument, "input size does not match the first layer");
    const std::size_t n = net.layers.size();
    if (cache) {
        cache->pre.resize(n);
        cache->post.resize(n + 1);
        cache->post[0] = input;
    }
    Eigen::MatrixXd a = input;
    Eigen::MatrixXd z;
    for (std::size_t i = 0; i < n; ++i) {
        const Layer& l = net.layers[i];
        z.noalias() = l.weight * a;
        z.colwise() += l.bias;
        activate(i + 1 == n ? net.output : net.hidden, net, z, a);
        if (cache) {
            cache->pre[i] = z;
            cache->post[i + 1] = a;
        }
    }
    return a;
}

Gradients backward(const Network& net, const ForwardCache& cache, const Eigen::MatrixXd& out_grad,
                   bool want_param_grads) {
    const std::size_t n = net.layers.size();
    require(cache.pre.size() == n && cache.post.size() == n + 1, ErrorKind::InvalidArgument,
            "cache does not belong to this network");
    require(out_grad.rows() == net.output_size() && out_grad.cols() == cache.post[0].cols(),
            ErrorKind::InvalidArgument, "output gradient shape mismatch");
    Gradients g;
    if (want_param_grads) g.layers.resize(n);
    Eigen::MatrixXd delta = out_grad;
    for (std::size_t ii = n; ii-- > 0;) {
        const Layer& l = net.layers[ii];
        activate_grad(ii + 1 == n ? net.output : net.hidden, net, cache.pre[ii], cache.post[ii + 1], delta);
        if (want_param_grads) {
            g.layers[ii].weight.noalias() = delta * cache.post[ii].transpose();
            g.layers[ii].bias = delta.rowwise().sum();
        }
        Eigen::MatrixXd prev;
        prev.noalias() = l.weight.transpose() * delta;
        delta = std::move(prev);
    }
    g.input = std::move(delta);
    return g;
}

OptimState make_optim(const Network& net, double lr, OptimizerKind kind) {
    OptimState opt;
    opt.kind = kind;
    opt.lr = lr;
    const auto n = static_cast<Eigen::Index>(net.param_count());
    opt.m = Eigen::VectorXd::Zero(n);
    opt.v = Eigen::VectorXd::Zero(n);
    return opt;
}

void optimizer_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, OptimState& opt) {
    require(params.size() == grads.size(), ErrorKind::InvalidArgument, "gradient size does not match parameters");
    ++opt.step;
    if (opt.kind == OptimizerKind::Sgd) {
        params -= opt.lr * grads;
        return;
    }
    if (opt.m.size() != params.size()) {
        opt.m = Eigen::VectorXd::Zero(params.size());
        opt.v = Eigen::VectorXd::Zero(params.size());
    }
    opt.m = opt.beta1 * opt.m + (1.0 - opt.beta1) * grads;
    opt.v = opt.beta2 * opt.v + (1.0 - opt.beta2) * grads.cwiseAbs2();
    const double t = static_cast<double>(opt.step);
    const double c1 = 1.0 - std::pow(opt.beta1, t);
    const double c2 = 1.0 - std::pow(opt.beta2, t);
    params.array() -= opt.lr * (opt.m.array() / c1) / ((opt.v.array() / c2).sqrt() + opt.eps);
}

void optimizer_step(Network& net, const std::vector<Layer>& grads, OptimState& opt) {
    require(grads.size() == net.layers.size(), ErrorKind::InvalidArgument, "gradient layer count mismatch");
    Eigen::VectorXd p = net.flatten();
    optimizer_step(p, flatten(grads), opt);
    net.unflatten(p);
}

void soft_update(Network& target, const Network& source, double lam) {
    require(lam > 0.0 && lam < 1.0, ErrorKind::InvalidArgument, "polyak factor must lie in (0, 1)");
    require(target.sizes() == source.sizes(), ErrorKind::InvalidArgument, "soft update between different shapes");
    for (std::size_t i = 0; i < target.layers.size(); ++i) {
        target.layers[i].weight = lam * target.layers[i].weight + (1.0 - lam) * source.layers[i].weight;
        target.layers[i].bias = lam * target.layers[i].bias + (1.0 - lam) * source.layers[i].bias;
    }
}

}  // namespace ibcdmp
