#include "latentseg/neural.hpp"

#include <cmath>
#include <string>

#include "latentseg/kernels.hpp"
#include "latentseg/rng.hpp"

namespace latentseg {

OptimizerState OptimizerState::sgd(double lr) {
    OptimizerState s;
    s.method = OptMethod::sgd;
    s.lr = lr;
    return s;
}

OptimizerState OptimizerState::adam(double lr) {
    OptimizerState s;
    s.method = OptMethod::adam;
    s.lr = lr;
    return s;
}

double activation_apply(Activation a, double v) {
    switch (a) {
    case Activation::identity: return v;
    case Activation::tanh_act: return std::tanh(v);
    case Activation::sigmoid_act: return 1.0 / (1.0 + std::exp(-v));
    }
    return v;
}

namespace {

// Derivative expressed through the post-activation value.
double activation_deriv(Activation a, double post) {
    switch (a) {
    case Activation::identity: return 1.0;
    case Activation::tanh_act: return 1.0 - post * post;
    case Activation::sigmoid_act: return post * (1.0 - post);
    }
    return 1.0;
}

} // namespace

MlpParams init_mlp(const MlpSpec& spec, std::uint64_t seed) {
    if (spec.input == 0) throw ValidationError("init_mlp: zero-width input");
    MlpParams p;
    Rng rng(seed);
    std::size_t fan_in = spec.input;
    for (const auto& ls : spec.layers) {
        if (ls.width == 0) throw ValidationError("init_mlp: zero-width layer");
        Layer l;
        l.act = ls.act;
        l.w = Matrix(ls.width, fan_in);
        l.b.assign(ls.width, 0.0);
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + ls.width));
        for (double& v : l.w.data) v = (2.0 * rng.uniform() - 1.0) * bound;
        fan_in = ls.width;
        p.layers.push_back(std::move(l));
    }
    return p;
}

ForwardCache forward(const MlpParams& p, const Matrix& x) {
    // An empty network is the identity; the VAE uses this for headless trunks.
    if (!p.layers.empty() && x.cols != p.input_width())
        throw ValidationError("forward: input width mismatch");
    ForwardCache cache;
    cache.acts.push_back(x);
    for (const auto& l : p.layers) {
        Matrix z = kernels::gemm_nt(cache.acts.back(), l.w);
        for (std::size_t i = 0; i < z.rows; ++i)
            for (std::size_t j = 0; j < z.cols; ++j)
                z(i, j) = activation_apply(l.act, z(i, j) + l.b[j]);
        cache.acts.push_back(std::move(z));
    }
    return cache;
}

Gradients backward(const MlpParams& p, const ForwardCache& cache, const Matrix& d_out) {
    if (cache.acts.size() != p.layers.size() + 1)
        throw ValidationError("backward: cache does not match network depth");
    if (!d_out.same_shape(cache.acts.back()))
        throw ValidationError("backward: d_out shape does not match cached output");

    Gradients g;
    g.dw.resize(p.layers.size());
    g.db.resize(p.layers.size());

    Matrix delta = d_out;
    for (std::size_t li = p.layers.size(); li-- > 0;) {
        const auto& post = cache.acts[li + 1];
        Matrix dz = delta;
        for (std::size_t i = 0; i < dz.rows; ++i)
            for (std::size_t j = 0; j < dz.cols; ++j)
                dz(i, j) *= activation_deriv(p.layers[li].act, post(i, j));

        g.dw[li] = kernels::gemm_tn(dz, cache.acts[li]);
        g.db[li].assign(dz.cols, 0.0);
        for (std::size_t i = 0; i < dz.rows; ++i)
            for (std::size_t j = 0; j < dz.cols; ++j) g.db[li][j] += dz(i, j);

        delta = kernels::gemm_nn(dz, p.layers[li].w);
    }
    g.d_input = std::move(delta);
    return g;
}

namespace {

void adam_update(double& p, double g, double& m, double& v, const OptimizerState& s,
                 double bias1, double bias2) {
    m = s.beta1 * m + (1.0 - s.beta1) * g;
    v = s.beta2 * v + (1.0 - s.beta2) * g * g;
    p -= s.lr * (m / bias1) / (std::sqrt(v / bias2) + s.eps);
}

} // namespace

void apply_step(MlpParams& p, const Gradients& g, OptimizerState& s) {
    if (g.dw.size() != p.layers.size()) throw ValidationError("apply_step: gradient shape mismatch");
    for (std::size_t li = 0; li < p.layers.size(); ++li) {
        for (double v : g.dw[li].data)
            if (!std::isfinite(v))
                throw NumericError("apply_step: non-finite gradient in layer " + std::to_string(li));
        for (double v : g.db[li])
            if (!std::isfinite(v))
                throw NumericError("apply_step: non-finite gradient in layer " + std::to_string(li));
    }

    if (s.method == OptMethod::sgd) {
        for (std::size_t li = 0; li < p.layers.size(); ++li) {
            auto& l = p.layers[li];
            for (std::size_t i = 0; i < l.w.data.size(); ++i) l.w.data[i] -= s.lr * g.dw[li].data[i];
            for (std::size_t j = 0; j < l.b.size(); ++j) l.b[j] -= s.lr * g.db[li][j];
        }
        s.step_count += 1;
        return;
    }

    if (s.m_w.empty()) {
        for (const auto& l : p.layers) {
            s.m_w.emplace_back(l.w.rows, l.w.cols);
            s.v_w.emplace_back(l.w.rows, l.w.cols);
            s.m_b.emplace_back(l.b.size(), 0.0);
            s.v_b.emplace_back(l.b.size(), 0.0);
        }
    }
    s.step_count += 1;
    const double bias1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step_count));
    const double bias2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step_count));
    for (std::size_t li = 0; li < p.layers.size(); ++li) {
        auto& l = p.layers[li];
        for (std::size_t i = 0; i < l.w.data.size(); ++i)
            adam_update(l.w.data[i], g.dw[li].data[i], s.m_w[li].data[i], s.v_w[li].data[i], s, bias1,
                        bias2);
        for (std::size_t j = 0; j < l.b.size(); ++j)
            adam_update(l.b[j], g.db[li][j], s.m_b[li][j], s.v_b[li][j], s, bias1, bias2);
    }
}

} // namespace latentseg
