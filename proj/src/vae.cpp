#include "latentseg/vae.hpp"

#include <algorithm>
#include <cmath>

#include "latentseg/kernels.hpp"
#include "latentseg/rng.hpp"

namespace latentseg {

namespace {

constexpr double two_pi = 2.0 * 3.14159265358979323846;

MlpSpec trunk_spec(std::size_t input, const std::vector<std::size_t>& hidden) {
    MlpSpec s;
    s.input = input;
    for (std::size_t w : hidden) s.layers.push_back({w, Activation::tanh_act});
    return s;
}

MlpSpec head_spec(std::size_t input, std::size_t output) {
    MlpSpec s;
    s.input = input;
    s.layers.push_back({output, Activation::identity});
    return s;
}

Matrix head_forward(const MlpParams& head, const Matrix& h) {
    return forward(head, h).output();
}

void clamp_inplace(Matrix& lv, double c, std::vector<char>* active = nullptr) {
    if (active) active->assign(lv.data.size(), 1);
    for (std::size_t i = 0; i < lv.data.size(); ++i) {
        if (lv.data[i] > c) {
            lv.data[i] = c;
            if (active) (*active)[i] = 0;
        } else if (lv.data[i] < -c) {
            lv.data[i] = -c;
            if (active) (*active)[i] = 0;
        }
    }
}

} // namespace

VaeModel init_vae(std::size_t d_x, const VaeArch& arch, std::uint64_t seed) {
    if (d_x == 0) throw ValidationError("init_vae: d_x must be positive");
    if (arch.d_z == 0) throw ValidationError("init_vae: d_z must be positive");
    VaeModel m;
    m.d_x = d_x;
    m.d_z = arch.d_z;

    const std::size_t enc_out = arch.hidden.empty() ? d_x : arch.hidden.back();
    std::vector<std::size_t> dec_hidden(arch.hidden.rbegin(), arch.hidden.rend());
    const std::size_t dec_out = dec_hidden.empty() ? arch.d_z : dec_hidden.back();

    m.enc_trunk = init_mlp(trunk_spec(d_x, arch.hidden), Rng::derive(seed, 0));
    m.enc_mu = init_mlp(head_spec(enc_out, arch.d_z), Rng::derive(seed, 1));
    m.enc_logvar = init_mlp(head_spec(enc_out, arch.d_z), Rng::derive(seed, 2));
    m.dec_trunk = init_mlp(trunk_spec(arch.d_z, dec_hidden), Rng::derive(seed, 3));
    m.dec_mu = init_mlp(head_spec(dec_out, d_x), Rng::derive(seed, 4));
    m.dec_logvar = init_mlp(head_spec(dec_out, d_x), Rng::derive(seed, 5));
    return m;
}

EncodeResult encode(const VaeModel& m, const Matrix& x) {
    if (x.cols != m.d_x) throw ValidationError("encode: input width mismatch");
    const Matrix h = forward(m.enc_trunk, x).output();
    EncodeResult r;
    r.mu = head_forward(m.enc_mu, h);
    r.logvar = head_forward(m.enc_logvar, h);
    clamp_inplace(r.logvar, m.logvar_clamp);
    r.sigma = r.logvar;
    for (double& v : r.sigma.data) v = std::exp(0.5 * v);
    for (double v : r.mu.data)
        if (!std::isfinite(v)) throw NumericError("encode: non-finite activation");
    return r;
}

DecodeResult decode(const VaeModel& m, const Matrix& z) {
    if (z.cols != m.d_z) throw ValidationError("decode: latent width mismatch");
    const Matrix h = forward(m.dec_trunk, z).output();
    DecodeResult r;
    r.mu = head_forward(m.dec_mu, h);
    r.logvar = head_forward(m.dec_logvar, h);
    clamp_inplace(r.logvar, m.logvar_clamp);
    return r;
}

Matrix reparameterize(const Matrix& mu, const Matrix& sigma, const Matrix& eps) {
    if (!mu.same_shape(sigma) || !mu.same_shape(eps))
        throw ValidationError("reparameterize: shapes differ");
    Matrix z = mu;
    for (std::size_t i = 0; i < z.data.size(); ++i) z.data[i] += sigma.data[i] * eps.data[i];
    return z;
}

double kl_std_normal(std::span<const double> mu, std::span<const double> sigma) {
    if (mu.size() != sigma.size()) throw ValidationError("kl_std_normal: shapes differ");
    double acc = 0.0;
    for (std::size_t d = 0; d < mu.size(); ++d) {
        if (sigma[d] <= 0.0) throw ValidationError("kl_std_normal: sigma must be positive");
        acc += mu[d] * mu[d] + sigma[d] * sigma[d] - 1.0 - 2.0 * std::log(sigma[d]);
    }
    return 0.5 * acc;
}

ElboParts elbo(const VaeModel& m, std::span<const double> x, std::span<const double> eps) {
    if (x.size() != m.d_x) throw ValidationError("elbo: input width mismatch");
    if (eps.size() != m.d_z) throw ValidationError("elbo: noise width mismatch");
    Matrix xb(1, m.d_x);
    xb.set_row(0, x);
    const auto enc = encode(m, xb);
    Matrix eb(1, m.d_z);
    eb.set_row(0, eps);
    const Matrix z = reparameterize(enc.mu, enc.sigma, eb);
    const auto dec = decode(m, z);

    ElboParts parts;
    for (std::size_t j = 0; j < m.d_x; ++j) {
        const double lv = dec.logvar(0, j);
        const double resid = x[j] - dec.mu(0, j);
        parts.recon_loglik += -0.5 * (std::log(two_pi) + lv) - resid * resid / (2.0 * std::exp(lv));
    }
    parts.kl = kl_std_normal(enc.mu.row(0), enc.sigma.row(0));
    parts.negative_elbo = -parts.recon_loglik + parts.kl;
    if (!std::isfinite(parts.negative_elbo))
        throw NumericError("elbo: non-finite value (recon=" + std::to_string(parts.recon_loglik) +
                           ", kl=" + std::to_string(parts.kl) + ")");
    return parts;
}

VaeBatchResult vae_batch_loss_grads(const VaeModel& m, const Matrix& x, const Matrix& eps) {
    if (x.cols != m.d_x) throw ValidationError("vae batch: input width mismatch");
    if (eps.rows != x.rows || eps.cols != m.d_z)
        throw ValidationError("vae batch: noise shape mismatch");
    const std::size_t batch = x.rows;
    const double inv_b = 1.0 / static_cast<double>(batch);

    // Forward, keeping every intermediate needed for the exact backward pass.
    const ForwardCache enc_cache = forward(m.enc_trunk, x);
    const Matrix& h_enc = enc_cache.output();
    const ForwardCache enc_mu_cache = forward(m.enc_mu, h_enc);
    const ForwardCache enc_lv_cache = forward(m.enc_logvar, h_enc);
    const Matrix& mu_z = enc_mu_cache.output();
    Matrix lv_z = enc_lv_cache.output();
    std::vector<char> lv_z_active;
    clamp_inplace(lv_z, m.logvar_clamp, &lv_z_active);
    Matrix sigma_z = lv_z;
    for (double& v : sigma_z.data) v = std::exp(0.5 * v);

    const Matrix z = reparameterize(mu_z, sigma_z, eps);
    const ForwardCache dec_cache = forward(m.dec_trunk, z);
    const Matrix& h_dec = dec_cache.output();
    const ForwardCache dec_mu_cache = forward(m.dec_mu, h_dec);
    const ForwardCache dec_lv_cache = forward(m.dec_logvar, h_dec);
    const Matrix& mu_x = dec_mu_cache.output();
    Matrix lv_x = dec_lv_cache.output();
    std::vector<char> lv_x_active;
    clamp_inplace(lv_x, m.logvar_clamp, &lv_x_active);

    VaeBatchResult out;
    double recon_sum = 0.0, kl_sum = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        for (std::size_t j = 0; j < m.d_x; ++j) {
            const double lv = lv_x(i, j);
            const double resid = x(i, j) - mu_x(i, j);
            recon_sum += -0.5 * (std::log(two_pi) + lv) - resid * resid / (2.0 * std::exp(lv));
        }
        for (std::size_t d = 0; d < m.d_z; ++d) {
            const double mu = mu_z(i, d);
            const double s2 = sigma_z(i, d) * sigma_z(i, d);
            kl_sum += 0.5 * (mu * mu + s2 - 1.0 - lv_z(i, d));
        }
    }
    out.recon_mean = recon_sum * inv_b;
    out.kl_mean = kl_sum * inv_b;
    out.loss = -out.recon_mean + out.kl_mean;

    // d loss / d decoder heads.
    Matrix d_mu_x(batch, m.d_x), d_lv_x(batch, m.d_x);
    for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t j = 0; j < m.d_x; ++j) {
            const double var = std::exp(lv_x(i, j));
            const double resid = x(i, j) - mu_x(i, j);
            d_mu_x(i, j) = -resid / var * inv_b;
            d_lv_x(i, j) =
                lv_x_active[i * m.d_x + j] ? (0.5 - resid * resid / (2.0 * var)) * inv_b : 0.0;
        }
    out.grads.dec_mu = backward(m.dec_mu, dec_mu_cache, d_mu_x);
    out.grads.dec_logvar = backward(m.dec_logvar, dec_lv_cache, d_lv_x);

    Matrix d_h_dec = out.grads.dec_mu.d_input;
    for (std::size_t i = 0; i < d_h_dec.data.size(); ++i)
        d_h_dec.data[i] += out.grads.dec_logvar.d_input.data[i];
    out.grads.dec_trunk = backward(m.dec_trunk, dec_cache, d_h_dec);
    const Matrix& d_z = out.grads.dec_trunk.d_input;

    // Through the reparameterization plus the KL term.
    Matrix d_mu_z(batch, m.d_z), d_lv_z(batch, m.d_z);
    for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t d = 0; d < m.d_z; ++d) {
            const double s = sigma_z(i, d);
            d_mu_z(i, d) = d_z(i, d) + mu_z(i, d) * inv_b;
            double g = d_z(i, d) * eps(i, d) * 0.5 * s + 0.5 * (s * s - 1.0) * inv_b;
            d_lv_z(i, d) = lv_z_active[i * m.d_z + d] ? g : 0.0;
        }
    out.grads.enc_mu = backward(m.enc_mu, enc_mu_cache, d_mu_z);
    out.grads.enc_logvar = backward(m.enc_logvar, enc_lv_cache, d_lv_z);

    Matrix d_h_enc = out.grads.enc_mu.d_input;
    for (std::size_t i = 0; i < d_h_enc.data.size(); ++i)
        d_h_enc.data[i] += out.grads.enc_logvar.d_input.data[i];
    out.grads.enc_trunk = backward(m.enc_trunk, enc_cache, d_h_enc);
    return out;
}

std::pair<VaeModel, TrainTrace> train_vae(const Matrix& data, const VaeArch& arch,
                                          std::uint64_t seed, const VaeMonitor* monitor) {
    if (data.rows == 0) throw ValidationError("train_vae: empty training data");
    for (double v : data.data)
        if (!std::isfinite(v)) throw ValidationError("train_vae: non-finite training data");
    if (arch.batch == 0) throw ValidationError("train_vae: batch must be positive");

    VaeModel model = init_vae(data.cols, arch, Rng::derive(seed, 0));
    {
        // Start the observation noise no tighter than the data's own marginal
        // variances so the first reconstruction gradients are O(1) on any
        // feature scale. Low-variance columns keep the unit-variance start.
        std::vector<double> mean, var;
        kernels::colwise_mean_var(data, mean, var);
        for (std::size_t j = 0; j < data.cols; ++j) {
            const double lv = std::log(std::max(var[j], 1.0));
            model.dec_logvar.layers.back().b[j] =
                std::clamp(lv, -model.logvar_clamp, model.logvar_clamp);
        }
    }
    Rng rng(Rng::derive(seed, 1));

    auto make_state = [&] {
        return arch.optimizer == OptMethod::sgd ? OptimizerState::sgd(arch.lr)
                                                : OptimizerState::adam(arch.lr);
    };
    OptimizerState st_enc_trunk = make_state(), st_enc_mu = make_state(), st_enc_lv = make_state();
    OptimizerState st_dec_trunk = make_state(), st_dec_mu = make_state(), st_dec_lv = make_state();

    TrainTrace trace;
    std::vector<std::size_t> order(data.rows);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < arch.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += arch.batch) {
            const std::size_t b = std::min(arch.batch, order.size() - start);
            const Matrix xb = data.take({order.data() + start, b});
            Matrix eps(b, arch.d_z);
            for (double& v : eps.data) v = rng.normal();

            VaeBatchResult r = vae_batch_loss_grads(model, xb, eps);
            if (!std::isfinite(r.loss))
                throw NumericError("train_vae: divergence at epoch " + std::to_string(epoch));
            apply_step(model.enc_trunk, r.grads.enc_trunk, st_enc_trunk);
            apply_step(model.enc_mu, r.grads.enc_mu, st_enc_mu);
            apply_step(model.enc_logvar, r.grads.enc_logvar, st_enc_lv);
            apply_step(model.dec_trunk, r.grads.dec_trunk, st_dec_trunk);
            apply_step(model.dec_mu, r.grads.dec_mu, st_dec_mu);
            apply_step(model.dec_logvar, r.grads.dec_logvar, st_dec_lv);
            loss_sum += r.loss * static_cast<double>(b);
        }
        trace.neg_elbo.push_back(loss_sum / static_cast<double>(data.rows));
        if (monitor && *monitor) {
            const auto [ch, bcdr] = (*monitor)(model, epoch);
            trace.ch.push_back(ch);
            trace.bcdr.push_back(bcdr);
        } else {
            trace.ch.push_back(std::numeric_limits<double>::quiet_NaN());
            trace.bcdr.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    return {std::move(model), std::move(trace)};
}

Matrix latent_expectation(const VaeModel& m, const Matrix& x, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("latent_expectation: n must be >= 1");
    const EncodeResult enc = encode(m, x);
    Matrix z(x.rows, m.d_z);
    const std::int64_t rows = static_cast<std::int64_t>(x.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) {
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));
        std::vector<double> eps_mean(m.d_z, 0.0);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t d = 0; d < m.d_z; ++d) eps_mean[d] += rng.normal();
        const auto ii = static_cast<std::size_t>(i);
        for (std::size_t d = 0; d < m.d_z; ++d) {
            z(ii, d) = enc.mu(ii, d) + enc.sigma(ii, d) * (eps_mean[d] / static_cast<double>(n));
        }
    }
    return z;
}

std::vector<VaeArch> default_arch_grid() {
    std::vector<VaeArch> grid;
    int id = 1;
    for (std::size_t width : {5, 10, 20, 30, 40, 50, 60, 70}) {
        VaeArch a;
        a.id = "arch" + std::to_string(id++);
        a.hidden = {width};
        a.lr = 0.01;
        grid.push_back(a);
    }
    for (double lr : {0.007, 0.008, 0.009, 0.011, 0.012, 0.013}) {
        VaeArch a;
        a.id = "arch" + std::to_string(id++);
        a.hidden = {30};
        a.lr = lr;
        grid.push_back(a);
    }
    return grid;
}

} // namespace latentseg
