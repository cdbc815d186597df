#include "bdrl/vae.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "bdrl/config.hpp"
#include "bdrl/snapshot.hpp"

namespace bdrl {
namespace {

constexpr double kSigmaFloor = 1e-6;
// Guard for log(q) when a softmax output underflows to zero.
constexpr double kProbFloor = 1e-300;
const double kHalfLog2Pi = 0.5 * std::log(2.0 * 3.14159265358979323846);

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double stable_softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

DenseNet make_encoder_y(const VaeConfig& c, SeededRng& rng) {
  const LayerSpec specs[] = {{c.class_hidden, Activation::relu},
                             {c.class_count, Activation::softmax}};
  return DenseNet(c.input_dim, specs, rng);
}

DenseNet make_encoder_z(const VaeConfig& c, SeededRng& rng) {
  const LayerSpec specs[] = {{c.z_hidden, Activation::relu},
                             {2 * c.latent_dim, Activation::identity}};
  return DenseNet(c.input_dim + c.class_count, specs, rng);
}

DenseNet make_decoder(const VaeConfig& c, SeededRng& rng) {
  const LayerSpec specs[] = {{c.decoder_hidden, Activation::relu},
                             {c.input_dim, Activation::identity}};
  return DenseNet(c.class_count + c.latent_dim, specs, rng);
}

}  // namespace

void VaeConfig::validate() const {
  if (input_dim == 0) throw std::invalid_argument("VaeConfig: input_dim must be positive");
  if (class_count == 0) throw std::invalid_argument("VaeConfig: class_count must be positive");
  if (latent_dim == 0) throw std::invalid_argument("VaeConfig: latent_dim must be positive");
  if (class_hidden == 0 || z_hidden == 0 || decoder_hidden == 0) {
    throw std::invalid_argument("VaeConfig: hidden widths must be positive");
  }
  if (!std::isfinite(alpha) || alpha < 0.0) {
    throw std::invalid_argument("VaeConfig: alpha must be finite and >= 0");
  }
  if (!bernoulli_mask.empty() && bernoulli_mask.size() != input_dim) {
    throw std::invalid_argument("VaeConfig: bernoulli_mask size mismatch");
  }
}

std::vector<std::uint8_t> bernoulli_mask_for(const FeatureConfig& features) {
  const auto layout = make_layout(features);
  std::vector<std::uint8_t> mask(layout->dim, 0);
  for (const FeatureBlockSpan& block : layout->blocks) {
    if (block.kind == FeatureBlock::s2) {
      std::fill(mask.begin() + block.offset,
                mask.begin() + block.offset + block.length, std::uint8_t{1});
    }
  }
  return mask;
}

VaeOptimizer VaeOptimizer::adam(double learning_rate) {
  return VaeOptimizer{OptimizerState::adam(learning_rate),
                      OptimizerState::adam(learning_rate),
                      OptimizerState::adam(learning_rate)};
}

VaeOptimizer VaeOptimizer::sgd(double learning_rate) {
  return VaeOptimizer{OptimizerState::sgd(learning_rate),
                      OptimizerState::sgd(learning_rate),
                      OptimizerState::sgd(learning_rate)};
}

VaeModel::VaeModel(const VaeConfig& config, SeededRng& init_rng)
    : config_([&] {
        config.validate();
        return config;
      }()),
      encoder_y_(make_encoder_y(config_, init_rng)),
      encoder_z_(make_encoder_z(config_, init_rng)),
      decoder_(make_decoder(config_, init_rng)) {}

VaeModel::VaeModel(VaeConfig config, DenseNet encoder_y, DenseNet encoder_z,
                   DenseNet decoder)
    : config_(std::move(config)),
      encoder_y_(std::move(encoder_y)),
      encoder_z_(std::move(encoder_z)),
      decoder_(std::move(decoder)) {
  config_.validate();
  if (encoder_y_.input_dim() != config_.input_dim ||
      encoder_y_.output_dim() != config_.class_count ||
      encoder_z_.input_dim() != config_.input_dim + config_.class_count ||
      encoder_z_.output_dim() != 2 * config_.latent_dim ||
      decoder_.input_dim() != config_.class_count + config_.latent_dim ||
      decoder_.output_dim() != config_.input_dim) {
    throw std::invalid_argument("VaeModel: networks do not match config");
  }
}

void VaeModel::set_alpha(double alpha) {
  if (!std::isfinite(alpha) || alpha < 0.0) {
    throw std::invalid_argument("VaeModel::set_alpha: alpha must be finite and >= 0");
  }
  config_.alpha = alpha;
}

std::vector<double> VaeModel::classify(std::span<const double> x) {
  if (x.size() != config_.input_dim) {
    throw std::invalid_argument("VaeModel::classify: input dimension mismatch");
  }
  Tensor out = encoder_y_.forward(Tensor::vector({x.begin(), x.end()}));
  encoder_y_.clear_cache();
  return {out.data(), out.data() + out.size()};
}

GaussianParams VaeModel::encode_z(std::span<const double> x, int y) {
  if (x.size() != config_.input_dim) {
    throw std::invalid_argument("VaeModel::encode_z: input dimension mismatch");
  }
  if (y < 0 || static_cast<std::size_t>(y) >= config_.class_count) {
    throw std::invalid_argument("VaeModel::encode_z: class index out of range");
  }
  const std::size_t d = config_.latent_dim;
  Tensor in = Tensor::vector(config_.input_dim + config_.class_count);
  std::copy(x.begin(), x.end(), in.data());
  in[config_.input_dim + static_cast<std::size_t>(y)] = 1.0;
  Tensor e = encoder_z_.forward(in);
  encoder_z_.clear_cache();
  GaussianParams params;
  params.mu.assign(e.data(), e.data() + d);
  params.sigma.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    params.sigma[j] = stable_softplus(e[d + j]) + kSigmaFloor;
  }
  return params;
}

std::vector<double> VaeModel::decode(int y, std::span<const double> z) {
  if (y < 0 || static_cast<std::size_t>(y) >= config_.class_count) {
    throw std::invalid_argument("VaeModel::decode: class index out of range");
  }
  if (z.size() != config_.latent_dim) {
    throw std::invalid_argument("VaeModel::decode: latent dimension mismatch");
  }
  Tensor in = Tensor::vector(config_.class_count + config_.latent_dim);
  in[static_cast<std::size_t>(y)] = 1.0;
  std::copy(z.begin(), z.end(), in.data() + config_.class_count);
  Tensor out = decoder_.forward(in);
  decoder_.clear_cache();
  return {out.data(), out.data() + out.size()};
}

double VaeModel::kl_gaussian(std::span<const double> mu,
                             std::span<const double> sigma) {
  if (mu.size() != sigma.size()) {
    throw std::invalid_argument("kl_gaussian: mu/sigma size mismatch");
  }
  double kl = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    if (!(sigma[j] > 0.0)) {
      throw std::invalid_argument("kl_gaussian: sigma must be positive");
    }
    kl += 0.5 * (mu[j] * mu[j] + sigma[j] * sigma[j] - 1.0) - std::log(sigma[j]);
  }
  return kl;
}

double VaeModel::recon_nll(std::span<const double> g,
                           std::span<const double> x) const {
  double nll = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (!config_.bernoulli_mask.empty() && config_.bernoulli_mask[j]) {
      // -log Bernoulli(x | sigmoid(g)) = softplus(g) - x * g.
      nll += stable_softplus(g[j]) - x[j] * g[j];
    } else {
      const double diff = g[j] - x[j];
      nll += 0.5 * diff * diff + kHalfLog2Pi;
    }
  }
  return nll;
}

void VaeModel::recon_nll_grad(std::span<const double> g,
                              std::span<const double> x, double weight,
                              double* out) const {
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (!config_.bernoulli_mask.empty() && config_.bernoulli_mask[j]) {
      out[j] = weight * (stable_sigmoid(g[j]) - x[j]);
    } else {
      out[j] = weight * (g[j] - x[j]);
    }
  }
}

double VaeModel::labeled_term(std::span<const double> x, int y,
                              std::span<const double> noise, double weight,
                              ParamGrads* g_z, ParamGrads* g_dec) {
  const std::size_t D = config_.input_dim;
  const std::size_t K = config_.class_count;
  const std::size_t d = config_.latent_dim;

  Tensor in_z = Tensor::vector(D + K);
  std::copy(x.begin(), x.end(), in_z.data());
  in_z[D + static_cast<std::size_t>(y)] = 1.0;
  Tensor e = encoder_z_.forward(in_z);

  std::vector<double> mu(d), sraw(d), sigma(d);
  Tensor in_dec = Tensor::vector(K + d);
  in_dec[static_cast<std::size_t>(y)] = 1.0;
  for (std::size_t j = 0; j < d; ++j) {
    mu[j] = e[j];
    sraw[j] = e[d + j];
    sigma[j] = stable_softplus(sraw[j]) + kSigmaFloor;
    in_dec[K + j] = mu[j] + sigma[j] * noise[j];
  }
  Tensor g = decoder_.forward(in_dec);

  const double recon = recon_nll({g.data(), g.size()}, x);
  const double kl = kl_gaussian(mu, sigma);
  const double loss = recon + kl + std::log(static_cast<double>(K));

  if (g_z == nullptr || g_dec == nullptr) {
    encoder_z_.clear_cache();
    decoder_.clear_cache();
    return loss;
  }

  Tensor dg = Tensor::vector(D);
  recon_nll_grad({g.data(), g.size()}, x, weight, dg.data());
  ParamGrads dec_grads = decoder_.backward(dg);
  g_dec->add_scaled(dec_grads, 1.0);

  // Chain through z = mu + sigma * eps and sigma = softplus(s) + floor,
  // adding the KL term's own dependence on (mu, sigma).
  Tensor de = Tensor::vector(2 * d);
  for (std::size_t j = 0; j < d; ++j) {
    const double dz = dec_grads.input_grad[K + j];
    const double dmu = dz + weight * mu[j];
    const double dsigma =
        dz * noise[j] + weight * (sigma[j] - 1.0 / sigma[j]);
    de[j] = dmu;
    de[d + j] = dsigma * stable_sigmoid(sraw[j]);
  }
  ParamGrads z_grads = encoder_z_.backward(de);
  g_z->add_scaled(z_grads, 1.0);
  return loss;
}

double VaeModel::unlabeled_term(std::span<const double> x,
                                std::span<const double> noise, double weight,
                                ParamGrads* g_y, ParamGrads* g_z,
                                ParamGrads* g_dec) {
  const std::size_t D = config_.input_dim;
  const std::size_t K = config_.class_count;
  const std::size_t d = config_.latent_dim;
  const bool want_grads = g_y != nullptr;

  Tensor qv = encoder_y_.forward(Tensor::vector({x.begin(), x.end()}));
  std::vector<double> q(qv.data(), qv.data() + K);
  if (!want_grads) encoder_y_.clear_cache();

  // All K candidate classes in one batch, sharing the same latent noise.
  Tensor in_z = Tensor::matrix(K, D + K);
  for (std::size_t k = 0; k < K; ++k) {
    double* row = in_z.data() + k * (D + K);
    std::copy(x.begin(), x.end(), row);
    row[D + k] = 1.0;
  }
  Tensor e = encoder_z_.forward(in_z);

  Tensor mu = Tensor::matrix(K, d);
  Tensor sraw = Tensor::matrix(K, d);
  Tensor sigma = Tensor::matrix(K, d);
  Tensor in_dec = Tensor::matrix(K, K + d);
  for (std::size_t k = 0; k < K; ++k) {
    double* dec_row = in_dec.data() + k * (K + d);
    dec_row[k] = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double m = e.at(k, j);
      const double s_raw = e.at(k, d + j);
      const double s = stable_softplus(s_raw) + kSigmaFloor;
      mu.at(k, j) = m;
      sraw.at(k, j) = s_raw;
      sigma.at(k, j) = s;
      dec_row[K + j] = m + s * noise[j];
    }
  }
  Tensor g = decoder_.forward(in_dec);

  const double log_k = std::log(static_cast<double>(K));
  std::vector<double> per_class_loss(K);
  double loss = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    double kl = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double m = mu.at(k, j);
      const double s = sigma.at(k, j);
      kl += 0.5 * (m * m + s * s - 1.0) - std::log(s);
    }
    per_class_loss[k] = recon_nll(g.row(k), x) + kl + log_k;
    loss += q[k] * per_class_loss[k];
  }
  // Negative entropy: sum_k q log q (0 contribution in the q -> 0 limit).
  for (std::size_t k = 0; k < K; ++k) {
    if (q[k] > 0.0) loss += q[k] * std::log(q[k]);
  }

  if (!want_grads) {
    encoder_z_.clear_cache();
    decoder_.clear_cache();
    return loss;
  }

  Tensor dg = Tensor::matrix(K, D);
  for (std::size_t k = 0; k < K; ++k) {
    recon_nll_grad(g.row(k), x, weight * q[k], dg.data() + k * D);
  }
  ParamGrads dec_grads = decoder_.backward(dg);
  g_dec->add_scaled(dec_grads, 1.0);

  Tensor de = Tensor::matrix(K, 2 * d);
  for (std::size_t k = 0; k < K; ++k) {
    const double wq = weight * q[k];
    for (std::size_t j = 0; j < d; ++j) {
      const double dz = dec_grads.input_grad.at(k, K + j);
      const double s = sigma.at(k, j);
      const double dmu = dz + wq * mu.at(k, j);
      const double dsigma = dz * noise[j] + wq * (s - 1.0 / s);
      de.at(k, j) = dmu;
      de.at(k, d + j) = dsigma * stable_sigmoid(sraw.at(k, j));
    }
  }
  ParamGrads z_grads = encoder_z_.backward(de);
  g_z->add_scaled(z_grads, 1.0);

  // dU/dq_k = L_k + log q_k + 1, routed through the softmax.
  Tensor dq = Tensor::vector(K);
  for (std::size_t k = 0; k < K; ++k) {
    dq[k] = weight *
            (per_class_loss[k] + std::log(std::max(q[k], kProbFloor)) + 1.0);
  }
  ParamGrads y_grads = encoder_y_.backward(dq);
  g_y->add_scaled(y_grads, 1.0);
  return loss;
}

double VaeModel::labeled_loss(std::span<const double> x, int y,
                              std::span<const double> noise) {
  if (x.size() != config_.input_dim) {
    throw std::invalid_argument("labeled_loss: input dimension mismatch");
  }
  if (y < 0 || static_cast<std::size_t>(y) >= config_.class_count) {
    throw std::invalid_argument("labeled_loss: class index out of range");
  }
  if (noise.size() != config_.latent_dim) {
    throw std::invalid_argument("labeled_loss: noise dimension mismatch");
  }
  return labeled_term(x, y, noise, 1.0, nullptr, nullptr);
}

double VaeModel::unlabeled_loss(std::span<const double> x,
                                std::span<const double> noise) {
  if (x.size() != config_.input_dim) {
    throw std::invalid_argument("unlabeled_loss: input dimension mismatch");
  }
  if (noise.size() != config_.latent_dim) {
    throw std::invalid_argument("unlabeled_loss: noise dimension mismatch");
  }
  return unlabeled_term(x, noise, 1.0, nullptr, nullptr, nullptr);
}

namespace {

void check_batch_shapes(const VaeConfig& config,
                        std::span<const std::span<const double>> labeled_x,
                        std::span<const int> labeled_y,
                        std::span<const std::span<const double>> unlabeled_x) {
  if (labeled_x.size() != labeled_y.size()) {
    throw std::invalid_argument("VAE batch: labeled x/y size mismatch");
  }
  if (labeled_x.empty() && unlabeled_x.empty()) {
    throw std::invalid_argument("VAE batch: both batches empty");
  }
  for (const auto& x : labeled_x) {
    if (x.size() != config.input_dim) {
      throw std::invalid_argument("VAE batch: labeled input dimension mismatch");
    }
  }
  for (int y : labeled_y) {
    if (y < 0 || static_cast<std::size_t>(y) >= config.class_count) {
      throw std::invalid_argument("VAE batch: class index out of range");
    }
  }
  for (const auto& x : unlabeled_x) {
    if (x.size() != config.input_dim) {
      throw std::invalid_argument("VAE batch: unlabeled input dimension mismatch");
    }
  }
}

void check_noise(std::size_t latent_dim,
                 std::span<const std::vector<double>> noise, std::size_t count,
                 const char* which) {
  if (noise.size() != count) {
    throw std::invalid_argument(std::string("VAE batch: ") + which +
                                " noise count mismatch");
  }
  for (const auto& n : noise) {
    if (n.size() != latent_dim) {
      throw std::invalid_argument(std::string("VAE batch: ") + which +
                                  " noise dimension mismatch");
    }
  }
}

}  // namespace

double VaeModel::batch_loss(
    std::span<const std::span<const double>> labeled_x,
    std::span<const int> labeled_y,
    std::span<const std::span<const double>> unlabeled_x,
    std::span<const std::vector<double>> labeled_noise,
    std::span<const std::vector<double>> unlabeled_noise) {
  check_batch_shapes(config_, labeled_x, labeled_y, unlabeled_x);
  check_noise(config_.latent_dim, labeled_noise, labeled_x.size(), "labeled");
  check_noise(config_.latent_dim, unlabeled_noise, unlabeled_x.size(),
              "unlabeled");

  double total = 0.0;
  for (std::size_t i = 0; i < labeled_x.size(); ++i) {
    total += labeled_term(labeled_x[i], labeled_y[i], labeled_noise[i], 1.0,
                          nullptr, nullptr);
    const std::vector<double> q = classify(labeled_x[i]);
    total += config_.alpha *
             -std::log(std::max(q[static_cast<std::size_t>(labeled_y[i])],
                                kProbFloor));
  }
  for (std::size_t i = 0; i < unlabeled_x.size(); ++i) {
    total += unlabeled_term(unlabeled_x[i], unlabeled_noise[i], 1.0, nullptr,
                            nullptr, nullptr);
  }
  return total;
}

ElboReport VaeModel::batch_gradients(
    std::span<const std::span<const double>> labeled_x,
    std::span<const int> labeled_y,
    std::span<const std::span<const double>> unlabeled_x,
    std::span<const std::vector<double>> labeled_noise,
    std::span<const std::vector<double>> unlabeled_noise, ParamGrads& g_y,
    ParamGrads& g_z, ParamGrads& g_dec) {
  check_batch_shapes(config_, labeled_x, labeled_y, unlabeled_x);
  check_noise(config_.latent_dim, labeled_noise, labeled_x.size(), "labeled");
  check_noise(config_.latent_dim, unlabeled_noise, unlabeled_x.size(),
              "unlabeled");

  ElboReport report;
  report.labeled_count = labeled_x.size();
  report.unlabeled_count = unlabeled_x.size();

  for (std::size_t i = 0; i < labeled_x.size(); ++i) {
    const double loss = labeled_term(labeled_x[i], labeled_y[i],
                                     labeled_noise[i], 1.0, &g_z, &g_dec);
    report.labeled_bound += loss;
    report.total_loss += loss;

    // Explicit classification term alpha * -log q(y|x).
    const auto y = static_cast<std::size_t>(labeled_y[i]);
    Tensor qv = encoder_y_.forward(
        Tensor::vector({labeled_x[i].begin(), labeled_x[i].end()}));
    const double qy = std::max(qv[y], kProbFloor);
    report.classification_loss += -std::log(qy);
    report.total_loss += config_.alpha * -std::log(qy);
    if (config_.alpha > 0.0) {
      Tensor dq = Tensor::vector(config_.class_count);
      dq[y] = -config_.alpha / qy;
      g_y.add_scaled(encoder_y_.backward(dq), 1.0);
    } else {
      encoder_y_.clear_cache();
    }
  }
  for (std::size_t i = 0; i < unlabeled_x.size(); ++i) {
    const double loss =
        unlabeled_term(unlabeled_x[i], unlabeled_noise[i], 1.0, &g_y, &g_z,
                       &g_dec);
    report.unlabeled_bound += loss;
    report.total_loss += loss;
  }
  return report;
}

ElboReport VaeModel::objective_step(
    std::span<const std::span<const double>> labeled_x,
    std::span<const int> labeled_y,
    std::span<const std::span<const double>> unlabeled_x, VaeOptimizer& opt,
    SeededRng& rng) {
  check_batch_shapes(config_, labeled_x, labeled_y, unlabeled_x);

  auto draw_noise = [&](std::size_t count) {
    std::vector<std::vector<double>> noise(count);
    for (auto& n : noise) {
      n.resize(config_.latent_dim);
      for (double& v : n) v = rng.normal();
    }
    return noise;
  };
  const auto labeled_noise = draw_noise(labeled_x.size());
  const auto unlabeled_noise = draw_noise(unlabeled_x.size());

  ParamGrads g_y = encoder_y_.zero_grads();
  ParamGrads g_z = encoder_z_.zero_grads();
  ParamGrads g_dec = decoder_.zero_grads();
  const ElboReport report =
      batch_gradients(labeled_x, labeled_y, unlabeled_x, labeled_noise,
                      unlabeled_noise, g_y, g_z, g_dec);

  apply_update(encoder_y_, g_y, opt.encoder_y);
  apply_update(encoder_z_, g_z, opt.encoder_z);
  apply_update(decoder_, g_dec, opt.decoder);
  return report;
}

void VaeModel::save(const std::string& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("VaeModel::save: cannot create " + dir);

  save_net(encoder_y_, dir + "/encoder_y.net");
  save_net(encoder_z_, dir + "/encoder_z.net");
  save_net(decoder_, dir + "/decoder.net");

  KvFile meta;
  meta.set_int("input_dim", static_cast<std::int64_t>(config_.input_dim));
  meta.set_int("class_count", static_cast<std::int64_t>(config_.class_count));
  meta.set_int("latent_dim", static_cast<std::int64_t>(config_.latent_dim));
  meta.set_int("class_hidden", static_cast<std::int64_t>(config_.class_hidden));
  meta.set_int("z_hidden", static_cast<std::int64_t>(config_.z_hidden));
  meta.set_int("decoder_hidden",
               static_cast<std::int64_t>(config_.decoder_hidden));
  meta.set_double("alpha", config_.alpha);
  std::string mask;
  for (std::uint8_t bit : config_.bernoulli_mask) mask += bit ? '1' : '0';
  meta.set("bernoulli_mask", mask);
  meta.write_file(dir + "/vae.txt");
}

VaeModel VaeModel::load(const std::string& dir) {
  const KvFile meta = KvFile::parse_file(dir + "/vae.txt");
  VaeConfig config;
  config.input_dim = static_cast<std::size_t>(meta.get_int("input_dim", 0));
  config.class_count = static_cast<std::size_t>(meta.get_int("class_count", 0));
  config.latent_dim = static_cast<std::size_t>(meta.get_int("latent_dim", 0));
  config.class_hidden =
      static_cast<std::size_t>(meta.get_int("class_hidden", 0));
  config.z_hidden = static_cast<std::size_t>(meta.get_int("z_hidden", 0));
  config.decoder_hidden =
      static_cast<std::size_t>(meta.get_int("decoder_hidden", 0));
  config.alpha = meta.get_double("alpha", 1.0);
  const std::string mask = meta.get_string("bernoulli_mask", "");
  config.bernoulli_mask.clear();
  for (char c : mask) {
    if (c != '0' && c != '1') {
      throw std::runtime_error("VaeModel::load: corrupt bernoulli_mask");
    }
    config.bernoulli_mask.push_back(c == '1' ? 1 : 0);
  }
  return VaeModel(std::move(config), load_net(dir + "/encoder_y.net"),
                  load_net(dir + "/encoder_z.net"),
                  load_net(dir + "/decoder.net"));
}

}  // namespace bdrl
