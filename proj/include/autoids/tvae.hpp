#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "autoids/common.hpp"
#include "autoids/error.hpp"
#include "autoids/rng.hpp"

namespace autoids {

struct TvaeConfig {
  int latent_dim = 16;  // clamped to the modeled feature count
  std::vector<int> hidden_sizes = {64, 32};
  int epochs = 300;
  int batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

// ELBO pieces for a Gaussian-decoder VAE on standardized columns:
// reconstruction = squared error summed over features, averaged over the
// batch; KL = mean over the batch of -1/2 sum(1 + lv - mu^2 - e^lv).
// The training loss is their sum (the negated ELBO up to constants).
inline std::pair<double, double> elbo_terms(const Matrix& x, const Matrix& reconstruction,
                                            const Matrix& mu, const Matrix& logvar) {
  if (x.rows() != reconstruction.rows() || x.cols() != reconstruction.cols() ||
      mu.rows() != x.rows() || logvar.rows() != x.rows() || mu.cols() != logvar.cols())
    throw DataError("elbo_terms: shape mismatch");
  const std::size_t n = x.rows();
  double recon = 0.0, kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double e = x(i, j) - reconstruction(i, j);
      recon += e * e;
    }
    for (std::size_t j = 0; j < mu.cols(); ++j) {
      const double m = mu(i, j), lv = logvar(i, j);
      kl += -0.5 * (1.0 + lv - m * m - std::exp(lv));
    }
  }
  return {recon / static_cast<double>(n), kl / static_cast<double>(n)};
}

namespace tvae_detail {

struct DenseLayer {
  std::size_t in = 0, out = 0;
  std::size_t w_off = 0, b_off = 0;  // offsets into the flat parameter vector
};

// encoder trunk -> (mu, logvar) heads; decoder mirrors the trunk
struct Net {
  std::size_t d_in = 0;
  std::size_t latent = 0;
  std::vector<DenseLayer> enc;  // tanh activations
  DenseLayer mu, logvar;        // linear heads
  std::vector<DenseLayer> dec;  // tanh activations
  DenseLayer out;               // linear reconstruction
  std::size_t n_params = 0;
};

inline Net build_net(std::size_t d_in, const std::vector<int>& hidden, std::size_t latent) {
  Net net;
  net.d_in = d_in;
  net.latent = latent;
  std::size_t off = 0;
  auto add = [&](std::size_t in, std::size_t out) {
    DenseLayer layer{in, out, off, off + in * out};
    off += in * out + out;
    return layer;
  };
  std::size_t width = d_in;
  for (const int h : hidden) {
    net.enc.push_back(add(width, static_cast<std::size_t>(h)));
    width = static_cast<std::size_t>(h);
  }
  net.mu = add(width, latent);
  net.logvar = add(width, latent);
  width = latent;
  for (auto it = hidden.rbegin(); it != hidden.rend(); ++it) {
    net.dec.push_back(add(width, static_cast<std::size_t>(*it)));
    width = static_cast<std::size_t>(*it);
  }
  net.out = add(width, d_in);
  net.n_params = off;
  return net;
}

inline void affine(const std::vector<double>& p, const DenseLayer& l, const double* in,
                   double* out) {
  for (std::size_t o = 0; o < l.out; ++o) {
    double acc = p[l.b_off + o];
    const double* w = p.data() + l.w_off + o * l.in;
    for (std::size_t i = 0; i < l.in; ++i) acc += w[i] * in[i];
    out[o] = acc;
  }
}

// accumulates dL/dW, dL/db and dL/dinput for one layer
inline void affine_backward(const std::vector<double>& p, std::vector<double>& grad,
                            const DenseLayer& l, const double* in, const double* dout,
                            double* din) {
  if (din)
    for (std::size_t i = 0; i < l.in; ++i) din[i] = 0.0;
  for (std::size_t o = 0; o < l.out; ++o) {
    const double g = dout[o];
    grad[l.b_off + o] += g;
    double* gw = grad.data() + l.w_off + o * l.in;
    const double* w = p.data() + l.w_off + o * l.in;
    for (std::size_t i = 0; i < l.in; ++i) {
      gw[i] += g * in[i];
      if (din) din[i] += g * w[i];
    }
  }
}

struct Workspace {
  std::vector<std::vector<double>> enc_act;  // post-tanh per encoder layer
  std::vector<std::vector<double>> dec_act;  // post-tanh per decoder layer
  std::vector<double> mu, lv, z, xhat;
  std::vector<double> d_a, d_b, d_mu, d_lv, d_z;

  void resize(const Net& net) {
    enc_act.resize(net.enc.size());
    for (std::size_t i = 0; i < net.enc.size(); ++i) enc_act[i].resize(net.enc[i].out);
    dec_act.resize(net.dec.size());
    for (std::size_t i = 0; i < net.dec.size(); ++i) dec_act[i].resize(net.dec[i].out);
    mu.resize(net.latent);
    lv.resize(net.latent);
    z.resize(net.latent);
    xhat.resize(net.d_in);
    std::size_t widest = std::max(net.d_in, net.latent);
    for (const auto& l : net.enc) widest = std::max(widest, l.out);
    for (const auto& l : net.dec) widest = std::max(widest, l.out);
    d_a.resize(widest);
    d_b.resize(widest);
    d_mu.resize(net.latent);
    d_lv.resize(net.latent);
    d_z.resize(net.latent);
  }
};

// forward pass for one standardized sample with fixed noise; returns
// recon + kl contribution (unscaled)
inline double forward(const Net& net, const std::vector<double>& p, const double* x,
                      const double* eps, Workspace& w) {
  const double* a = x;
  for (std::size_t i = 0; i < net.enc.size(); ++i) {
    affine(p, net.enc[i], a, w.enc_act[i].data());
    for (double& v : w.enc_act[i]) v = std::tanh(v);
    a = w.enc_act[i].data();
  }
  affine(p, net.mu, a, w.mu.data());
  affine(p, net.logvar, a, w.lv.data());
  double kl = 0.0;
  for (std::size_t j = 0; j < net.latent; ++j) {
    w.z[j] = w.mu[j] + std::exp(0.5 * w.lv[j]) * eps[j];
    kl += -0.5 * (1.0 + w.lv[j] - w.mu[j] * w.mu[j] - std::exp(w.lv[j]));
  }
  a = w.z.data();
  for (std::size_t i = 0; i < net.dec.size(); ++i) {
    affine(p, net.dec[i], a, w.dec_act[i].data());
    for (double& v : w.dec_act[i]) v = std::tanh(v);
    a = w.dec_act[i].data();
  }
  affine(p, net.out, a, w.xhat.data());
  double recon = 0.0;
  for (std::size_t j = 0; j < net.d_in; ++j) {
    const double e = x[j] - w.xhat[j];
    recon += e * e;
  }
  return recon + kl;
}

// backward pass matching forward(); scale folds in the 1/batch factor
inline void backward(const Net& net, const std::vector<double>& p, const double* x,
                     const double* eps, Workspace& w, double scale, std::vector<double>& grad) {
  // d recon / d xhat
  for (std::size_t j = 0; j < net.d_in; ++j) w.d_a[j] = 2.0 * (w.xhat[j] - x[j]) * scale;

  const double* dec_in =
      net.dec.empty() ? w.z.data() : w.dec_act[net.dec.size() - 1].data();
  affine_backward(p, grad, net.out, dec_in, w.d_a.data(), w.d_b.data());
  std::swap(w.d_a, w.d_b);

  for (std::size_t i = net.dec.size(); i-- > 0;) {
    const auto& act = w.dec_act[i];
    for (std::size_t j = 0; j < act.size(); ++j) w.d_a[j] *= 1.0 - act[j] * act[j];
    const double* in = i == 0 ? w.z.data() : w.dec_act[i - 1].data();
    affine_backward(p, grad, net.dec[i], in, w.d_a.data(), w.d_b.data());
    std::swap(w.d_a, w.d_b);
  }
  for (std::size_t j = 0; j < net.latent; ++j) w.d_z[j] = w.d_a[j];

  // z = mu + exp(lv/2) eps; KL adds mu and (e^lv - 1)/2 terms
  for (std::size_t j = 0; j < net.latent; ++j) {
    w.d_mu[j] = w.d_z[j] + w.mu[j] * scale;
    w.d_lv[j] = w.d_z[j] * 0.5 * std::exp(0.5 * w.lv[j]) * eps[j] +
                0.5 * (std::exp(w.lv[j]) - 1.0) * scale;
  }

  const double* trunk_out = net.enc.empty() ? x : w.enc_act[net.enc.size() - 1].data();
  affine_backward(p, grad, net.mu, trunk_out, w.d_mu.data(), w.d_a.data());
  affine_backward(p, grad, net.logvar, trunk_out, w.d_lv.data(), w.d_b.data());
  for (std::size_t j = 0; j < net.mu.in; ++j) w.d_a[j] += w.d_b[j];

  for (std::size_t i = net.enc.size(); i-- > 0;) {
    const auto& act = w.enc_act[i];
    for (std::size_t j = 0; j < act.size(); ++j) w.d_a[j] *= 1.0 - act[j] * act[j];
    const double* in = i == 0 ? x : w.enc_act[i - 1].data();
    affine_backward(p, grad, net.enc[i], in, w.d_a.data(), i == 0 ? nullptr : w.d_b.data());
    if (i != 0) std::swap(w.d_a, w.d_b);
  }
}

// mean loss over a batch with fixed noise; used by training and by the
// finite-difference checks
inline double batch_loss(const Net& net, const std::vector<double>& p, const Matrix& x,
                         const std::vector<std::size_t>& rows, const Matrix& eps) {
  Workspace w;
  w.resize(net);
  double total = 0.0;
  for (std::size_t b = 0; b < rows.size(); ++b)
    total += forward(net, p, x.row(rows[b]), eps.row(b), w);
  return total / static_cast<double>(rows.size());
}

inline double batch_gradient(const Net& net, const std::vector<double>& p, const Matrix& x,
                             const std::vector<std::size_t>& rows, const Matrix& eps,
                             std::vector<double>& grad) {
  Workspace w;
  w.resize(net);
  grad.assign(p.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(rows.size());
  double total = 0.0;
  for (std::size_t b = 0; b < rows.size(); ++b) {
    total += forward(net, p, x.row(rows[b]), eps.row(b), w);
    backward(net, p, x.row(rows[b]), eps.row(b), w, scale, grad);
  }
  return total * scale;
}

struct Adam {
  std::vector<double> m, v;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::size_t t = 0;

  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void step(std::vector<double>& p, const std::vector<double>& grad, double lr) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

}  // namespace tvae_detail

// Trained generator for one minority class. Zero-variance columns are left
// unmodeled and re-attached verbatim on sampling.
struct TvaeModel {
  TvaeConfig config;
  std::size_t d_total = 0;
  std::vector<std::size_t> modeled;      // original column indices fed to the net
  std::vector<double> constant_value;    // per original column; used when unmodeled
  std::vector<double> mean, stddev;      // per modeled column
  tvae_detail::Net net;
  std::vector<double> params;
  std::vector<double> epoch_loss;  // mean training loss per epoch
};

inline TvaeModel train_tvae(const Matrix& rows, const TvaeConfig& cfg) {
  if (rows.rows() < 2) throw TrainError("tvae needs at least 2 rows");
  if (rows.cols() < 1) throw TrainError("tvae needs at least 1 feature");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.latent_dim < 1 ||
      !(cfg.learning_rate > 0.0 && cfg.learning_rate < 1.0))
    throw ConfigError("invalid tvae configuration");

  const std::size_t n = rows.rows();
  const std::size_t d = rows.cols();
  TvaeModel model;
  model.config = cfg;
  model.d_total = d;
  model.constant_value.assign(d, 0.0);

  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += rows(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = rows(i, j) - mean;
      var += e * e;
    }
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    if (sd > 1e-12) {
      model.modeled.push_back(j);
      model.mean.push_back(mean);
      model.stddev.push_back(sd);
    } else {
      model.constant_value[j] = mean;
    }
  }

  const std::size_t dm = model.modeled.size();
  if (dm == 0) return model;  // every column constant: sampling replays the point

  const std::size_t latent = std::min<std::size_t>(static_cast<std::size_t>(cfg.latent_dim), dm);
  model.net = tvae_detail::build_net(dm, cfg.hidden_sizes, latent);

  // standardized training matrix
  Matrix x(n, dm);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dm; ++j)
      x(i, j) = (rows(i, model.modeled[j]) - model.mean[j]) / model.stddev[j];

  Rng init_rng(derive_seed(cfg.seed, 0x7AE0));
  model.params.assign(model.net.n_params, 0.0);
  auto init_layer = [&](const tvae_detail::DenseLayer& l) {
    const double bound = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
    for (std::size_t i = 0; i < l.in * l.out; ++i)
      model.params[l.w_off + i] = init_rng.uniform(-bound, bound);
  };
  for (const auto& l : model.net.enc) init_layer(l);
  init_layer(model.net.mu);
  init_layer(model.net.logvar);
  for (const auto& l : model.net.dec) init_layer(l);
  init_layer(model.net.out);

  Rng train_rng(derive_seed(cfg.seed, 0x7AE1));
  tvae_detail::Adam adam(model.params.size());
  std::vector<double> grad;
  std::vector<std::size_t> order = iota_index(n);
  const std::size_t bs = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);
  std::vector<std::size_t> batch;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    train_rng.shuffle(order);
    double epoch_total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t len = std::min(bs, n - start);
      batch.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                   order.begin() + static_cast<std::ptrdiff_t>(start + len));
      Matrix eps(len, latent);
      for (std::size_t b = 0; b < len; ++b)
        for (std::size_t j = 0; j < latent; ++j) eps(b, j) = train_rng.normal();
      const double loss = tvae_detail::batch_gradient(model.net, model.params, x, batch, eps, grad);
      if (!std::isfinite(loss))
        throw TrainError("non-finite tvae loss at epoch " + std::to_string(epoch));
      adam.step(model.params, grad, cfg.learning_rate);
      epoch_total += loss;
      ++batches;
    }
    model.epoch_loss.push_back(epoch_total / static_cast<double>(batches));
  }
  return model;
}

// Decodes n latent draws; de-standardizes modeled columns and re-attaches
// constant columns. Deterministic for a fixed model seed.
inline Matrix sample_synthetic(const TvaeModel& model, std::size_t n) {
  if (n < 1) throw ConfigError("sample count must be >= 1");
  Matrix out(n, model.d_total);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < model.d_total; ++j) out(i, j) = model.constant_value[j];
  const std::size_t dm = model.modeled.size();
  if (dm == 0) return out;

  Rng rng(derive_seed(model.config.seed, 0x7AE5));
  const auto& net = model.net;
  std::vector<double> z(net.latent);
  std::vector<std::vector<double>> act(net.dec.size());
  for (std::size_t i = 0; i < net.dec.size(); ++i) act[i].resize(net.dec[i].out);
  std::vector<double> xhat(net.d_in);

  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : z) v = rng.normal();
    const double* a = z.data();
    for (std::size_t l = 0; l < net.dec.size(); ++l) {
      tvae_detail::affine(model.params, net.dec[l], a, act[l].data());
      for (double& v : act[l]) v = std::tanh(v);
      a = act[l].data();
    }
    tvae_detail::affine(model.params, net.out, a, xhat.data());
    for (std::size_t j = 0; j < dm; ++j)
      out(i, model.modeled[j]) = xhat[j] * model.stddev[j] + model.mean[j];
  }
  return out;
}

}  // namespace autoids
