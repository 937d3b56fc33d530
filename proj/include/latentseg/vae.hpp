#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "latentseg/neural.hpp"

namespace latentseg {

struct VaeArch {
    std::string id = "arch4";
    std::size_t d_z = 2;
    std::vector<std::size_t> hidden = {30}; // shared trunk widths, tanh
    double lr = 0.01;
    std::size_t epochs = 50;
    std::size_t batch = 128;
    OptMethod optimizer = OptMethod::sgd;
};

// Gaussian encoder/decoder pair with diagonal covariance. Heads are linear;
// log-variance outputs are clamped to +-logvar_clamp.
struct VaeModel {
    MlpParams enc_trunk;
    MlpParams enc_mu;
    MlpParams enc_logvar;
    MlpParams dec_trunk;
    MlpParams dec_mu;
    MlpParams dec_logvar;
    std::size_t d_x = 0;
    std::size_t d_z = 0;
    double logvar_clamp = 10.0;
};

struct TrainTrace {
    std::vector<double> neg_elbo; // per-epoch mean over training rows
    std::vector<double> ch;       // NaN when no monitor is attached
    std::vector<double> bcdr;
    std::size_t epochs() const { return neg_elbo.size(); }
};

struct EncodeResult {
    Matrix mu;
    Matrix sigma;
    Matrix logvar;
};

struct DecodeResult {
    Matrix mu;
    Matrix logvar;
};

struct ElboParts {
    double recon_loglik = 0.0;
    double kl = 0.0;
    double negative_elbo = 0.0;
};

struct VaeGrads {
    Gradients enc_trunk, enc_mu, enc_logvar, dec_trunk, dec_mu, dec_logvar;
};

struct VaeBatchResult {
    double loss = 0.0; // mean negative ELBO over the batch
    double recon_mean = 0.0;
    double kl_mean = 0.0;
    VaeGrads grads;
};

VaeModel init_vae(std::size_t d_x, const VaeArch& arch, std::uint64_t seed);

EncodeResult encode(const VaeModel& m, const Matrix& x);
DecodeResult decode(const VaeModel& m, const Matrix& z);

// z = mu + sigma .* eps, elementwise.
Matrix reparameterize(const Matrix& mu, const Matrix& sigma, const Matrix& eps);

// KL(N(mu, diag(sigma^2)) || N(0, I)) for one latent vector.
double kl_std_normal(std::span<const double> mu, std::span<const double> sigma);

// Single-row, single-noise-draw ELBO decomposition.
ElboParts elbo(const VaeModel& m, std::span<const double> x, std::span<const double> eps);

// Mean negative ELBO over a batch and exact gradients for every parameter,
// differentiated through the reparameterized path at the given noise.
VaeBatchResult vae_batch_loss_grads(const VaeModel& m, const Matrix& x, const Matrix& eps);

// Optional per-epoch latent-quality probe: returns (CH, BCDR).
using VaeMonitor = std::function<std::pair<double, double>(const VaeModel&, std::size_t)>;

std::pair<VaeModel, TrainTrace> train_vae(const Matrix& data, const VaeArch& arch,
                                          std::uint64_t seed,
                                          const VaeMonitor* monitor = nullptr);

// Mean of n reparameterized draws per row; converges to mu as n grows.
Matrix latent_expectation(const VaeModel& m, const Matrix& x, std::size_t n, std::uint64_t seed);

// The architecture grid used for model selection (fourteen candidates:
// one-hidden-layer nets of widths 5..70 at lr 0.01 plus width 30 at lr
// 0.007..0.013, all with a 2-d latent and 50 epochs).
std::vector<VaeArch> default_arch_grid();

} // namespace latentseg
