#pragma once

#include <cstdint>
#include <vector>

#include "latentseg/matrix.hpp"

namespace latentseg {

enum class Activation { identity, tanh_act, sigmoid_act };

struct LayerSpec {
    std::size_t width = 0;
    Activation act = Activation::tanh_act;
};

struct MlpSpec {
    std::size_t input = 0;
    std::vector<LayerSpec> layers;
};

// Weights are stored out x in, so a forward pass is X * W^T + b.
struct Layer {
    Matrix w;
    std::vector<double> b;
    Activation act = Activation::identity;
};

struct MlpParams {
    std::vector<Layer> layers;

    std::size_t input_width() const { return layers.empty() ? 0 : layers.front().w.cols; }
    std::size_t output_width() const { return layers.empty() ? 0 : layers.back().w.rows; }
};

// Post-activation values per layer; acts[0] is the input batch.
struct ForwardCache {
    std::vector<Matrix> acts;
    const Matrix& output() const& { return acts.back(); }
    // A temporary cache hands the output over by value, so binding a reference
    // to forward(...).output() cannot dangle.
    Matrix output() && { return std::move(acts.back()); }
};

struct Gradients {
    std::vector<Matrix> dw;
    std::vector<std::vector<double>> db;
    Matrix d_input;
};

enum class OptMethod { sgd, adam };

struct OptimizerState {
    OptMethod method = OptMethod::adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t step_count = 0;
    // Lazily shaped like the parameters on the first step.
    std::vector<Matrix> m_w, v_w;
    std::vector<std::vector<double>> m_b, v_b;

    static OptimizerState sgd(double lr);
    static OptimizerState adam(double lr);
};

// Glorot-uniform weights, zero biases, deterministic per seed.
MlpParams init_mlp(const MlpSpec& spec, std::uint64_t seed);

ForwardCache forward(const MlpParams& p, const Matrix& x);

// Exact reverse-mode gradients of a loss whose gradient w.r.t. the network
// output is d_out (already including any batch-mean scaling).
Gradients backward(const MlpParams& p, const ForwardCache& cache, const Matrix& d_out);

void apply_step(MlpParams& p, const Gradients& g, OptimizerState& s);

double activation_apply(Activation a, double v);

} // namespace latentseg
