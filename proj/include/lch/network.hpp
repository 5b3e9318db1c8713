#pragma once

#include <cstdint>
#include <vector>

#include "lch/data_model.hpp"

namespace lch {

// Small MLP with tanh on every layer (output included), trained with plain
// SGD from analytically supplied output gradients.
struct NetworkParams {
    Modality modality = Modality::image;
    std::vector<int> layer_dims;           // input -> hidden... -> k
    std::vector<Matrix> weights;           // [l]: dims[l] x dims[l+1]
    std::vector<Vector> biases;            // [l]: dims[l+1]
    std::uint64_t seed = 0;

    int input_dim() const { return layer_dims.front(); }
    int output_dim() const { return layer_dims.back(); }
    int layers() const { return static_cast<int>(weights.size()); }
};

// Weights uniform in (-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero.
NetworkParams init_params(std::vector<int> layer_dims, Modality modality, std::uint64_t seed);

struct ForwardCache {
    Matrix input;                    // batch rows x dims[0]
    std::vector<Matrix> activations;  // [l]: batch rows x dims[l+1], post-tanh
};

// `batch` has one instance per row; output codes are bits x batch.
ContinuousCodes forward(const NetworkParams& net, const Matrix& batch);
ContinuousCodes forward_cached(const NetworkParams& net, const Matrix& batch, ForwardCache& cache);

struct ParamGrads {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
};

// Gradient of sum_ij upstream(i,j) * output(i,j) w.r.t. every parameter.
// `output_grad` is bits x batch, matching forward()'s output layout.
ParamGrads backward(const NetworkParams& net, const Matrix& batch, const Matrix& output_grad);
ParamGrads backward_cached(const NetworkParams& net, const ForwardCache& cache,
                           const Matrix& output_grad);

void sgd_step(NetworkParams& net, const ParamGrads& grads, double learning_rate);

}  // namespace lch
