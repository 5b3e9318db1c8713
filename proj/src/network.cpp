#include "lch/network.hpp"

#include <cmath>
#include <random>

#include "lch/rng.hpp"

namespace lch {

NetworkParams init_params(std::vector<int> layer_dims, Modality modality, std::uint64_t seed) {
    if (layer_dims.size() < 2) throw DataError("init_params: need at least input and output dims");
    for (int d : layer_dims)
        if (d < 1) throw DataError("init_params: layer dims must be >= 1");

    NetworkParams net;
    net.modality = modality;
    net.layer_dims = std::move(layer_dims);
    net.seed = seed;
    auto rng = make_rng(seed, static_cast<std::uint64_t>(modality) + 0x11);
    for (std::size_t l = 0; l + 1 < net.layer_dims.size(); ++l) {
        const int fan_in = net.layer_dims[l];
        const int fan_out = net.layer_dims[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Matrix w(fan_in, fan_out);
        for (Index i = 0; i < w.rows(); ++i)
            for (Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
        net.weights.push_back(std::move(w));
        net.biases.push_back(Vector::Zero(fan_out));
    }
    return net;
}

namespace {

void check_input(const NetworkParams& net, const Matrix& batch) {
    if (batch.cols() != net.input_dim())
        throw ShapeError("forward: input dim " + std::to_string(batch.cols()) + " != " +
                         std::to_string(net.input_dim()));
}

}  // namespace

ContinuousCodes forward_cached(const NetworkParams& net, const Matrix& batch, ForwardCache& cache) {
    check_input(net, batch);
    cache.input = batch;
    cache.activations.clear();
    cache.activations.reserve(net.weights.size());
    Matrix a = batch;
    for (int l = 0; l < net.layers(); ++l) {
        Matrix z = a * net.weights[static_cast<std::size_t>(l)];
        z.rowwise() += net.biases[static_cast<std::size_t>(l)].transpose();
        a = z.array().tanh();
        cache.activations.push_back(a);
    }
    return make_continuous(a.transpose());
}

ContinuousCodes forward(const NetworkParams& net, const Matrix& batch) {
    ForwardCache cache;
    return forward_cached(net, batch, cache);
}

ParamGrads backward_cached(const NetworkParams& net, const ForwardCache& cache,
                           const Matrix& output_grad) {
    const Index rows = cache.input.rows();
    if (output_grad.rows() != net.output_dim() || output_grad.cols() != rows)
        throw ShapeError("backward: output_grad must be k x batch");

    ParamGrads grads;
    grads.weights.resize(static_cast<std::size_t>(net.layers()));
    grads.biases.resize(static_cast<std::size_t>(net.layers()));

    // delta: gradient w.r.t. pre-activation z of the current layer, rows x width.
    Matrix delta;
    for (int l = net.layers() - 1; l >= 0; --l) {
        const Matrix& act = cache.activations[static_cast<std::size_t>(l)];
        Matrix da = (l == net.layers() - 1)
                        ? Matrix(output_grad.transpose())
                        : Matrix(delta * net.weights[static_cast<std::size_t>(l + 1)].transpose());
        delta = da.array() * (1.0 - act.array().square());
        const Matrix& below =
            (l == 0) ? cache.input : cache.activations[static_cast<std::size_t>(l - 1)];
        grads.weights[static_cast<std::size_t>(l)] = below.transpose() * delta;
        grads.biases[static_cast<std::size_t>(l)] = delta.colwise().sum().transpose();
    }
    return grads;
}

ParamGrads backward(const NetworkParams& net, const Matrix& batch, const Matrix& output_grad) {
    ForwardCache cache;
    forward_cached(net, batch, cache);
    return backward_cached(net, cache, output_grad);
}

void sgd_step(NetworkParams& net, const ParamGrads& grads, double learning_rate) {
    if (learning_rate < 0) throw DataError("sgd_step: learning rate must be >= 0");
    for (int l = 0; l < net.layers(); ++l) {
        const auto& gw = grads.weights[static_cast<std::size_t>(l)];
        const auto& gb = grads.biases[static_cast<std::size_t>(l)];
        if (!gw.allFinite())
            throw NumericalError("sgd_step: non-finite gradient at " +
                                 std::string(modality_name(net.modality)) + " net layer " +
                                 std::to_string(l) + " weights");
        if (!gb.allFinite())
            throw NumericalError("sgd_step: non-finite gradient at " +
                                 std::string(modality_name(net.modality)) + " net layer " +
                                 std::to_string(l) + " biases");
        net.weights[static_cast<std::size_t>(l)] -= learning_rate * gw;
        net.biases[static_cast<std::size_t>(l)] -= learning_rate * gb;
    }
}

}  // namespace lch
