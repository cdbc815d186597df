#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bdrl/dense_net.hpp"
#include "bdrl/features.hpp"
#include "bdrl/optimizer.hpp"
#include "bdrl/rng.hpp"

namespace bdrl {

// Configuration of the semi-supervised VAE.
//
// The model factorises as
//   q(y|x)    = Cat(pi(x))                      (encoder_y)
//   q(z|y,x)  = N(mu(y,x), diag sigma^2(y,x))   (encoder_z)
//   p(x|y,z)  = product of per-coordinate likelihoods (decoder)
//   p(y)      = uniform over class_count, p(z) = N(0, I)
//
// Per-coordinate likelihoods: Bernoulli with logit output where
// bernoulli_mask is 1 (one-hot feature bits), unit-variance Gaussian with
// mean output elsewhere.
struct VaeConfig {
  std::size_t input_dim = 0;    // feature dimension D
  std::size_t class_count = 0;  // K (grid cells)
  std::size_t latent_dim = 8;
  std::size_t class_hidden = 64;
  std::size_t z_hidden = 64;
  std::size_t decoder_hidden = 64;
  double alpha = 1.0;  // weight of the explicit classification term

  // Size input_dim (or empty for all-Gaussian).
  std::vector<std::uint8_t> bernoulli_mask;

  void validate() const;
};

// Marks one-hot (s2) feature coordinates as Bernoulli-distributed for the
// decoder likelihood.
std::vector<std::uint8_t> bernoulli_mask_for(const FeatureConfig& features);

struct GaussianParams {
  std::vector<double> mu;
  std::vector<double> sigma;
};

// Loss breakdown of one objective evaluation.  All components are
// minimised losses (negated evidence bounds), summed over the batch, so
//   total_loss = labeled_bound + unlabeled_bound
//              + alpha * classification_loss.
struct ElboReport {
  double labeled_bound = 0.0;        // sum of labeled_loss(x, y)
  double unlabeled_bound = 0.0;      // sum of unlabeled_loss(x)
  double classification_loss = 0.0;  // sum of -log q(y|x), unweighted
  double total_loss = 0.0;
  std::size_t labeled_count = 0;
  std::size_t unlabeled_count = 0;
};

// Optimizer triple, one state per sub-network.
struct VaeOptimizer {
  OptimizerState encoder_y;
  OptimizerState encoder_z;
  OptimizerState decoder;

  static VaeOptimizer adam(double learning_rate);
  static VaeOptimizer sgd(double learning_rate);
};

// Semi-supervised deep generative model (classifier + conditional VAE)
// trained with the reparameterisation trick.  Losses are minimised:
// L(x,y) is the negated labeled evidence bound, and the unlabeled term
// marginalises the class exactly, U(x) = sum_y q(y|x) L(x,y) - H(q(y|x)),
// evaluated with the *same* latent noise for every candidate class.
class VaeModel {
 public:
  VaeModel(const VaeConfig& config, SeededRng& init_rng);

  const VaeConfig& config() const { return config_; }
  std::size_t input_dim() const { return config_.input_dim; }
  std::size_t class_count() const { return config_.class_count; }
  std::size_t latent_dim() const { return config_.latent_dim; }
  double alpha() const { return config_.alpha; }
  void set_alpha(double alpha);

  // q(y|x): a proper distribution over classes (softmax output).
  // Throws std::invalid_argument when x has the wrong dimension.
  std::vector<double> classify(std::span<const double> x);

  // Posterior parameters of q(z|y,x).  sigma is strictly positive
  // (softplus of the raw output plus a small floor).  Throws
  // std::invalid_argument for a bad dimension or class index.
  GaussianParams encode_z(std::span<const double> x, int y);

  // Raw decoder outputs for (y, z): Gaussian means / Bernoulli logits.
  std::vector<double> decode(int y, std::span<const double> z);

  // KL(N(mu, diag sigma^2) || N(0, I)); exactly zero at (0, 1).
  static double kl_gaussian(std::span<const double> mu,
                            std::span<const double> sigma);

  // L(x, y) evaluated with the given latent noise (length latent_dim):
  // reconstruction NLL + KL + log K.  Lower is better.
  double labeled_loss(std::span<const double> x, int y,
                      std::span<const double> noise);

  // U(x) = sum_y q(y|x) L(x,y) - H(q(y|x)), with the same noise shared
  // across all candidate classes.
  double unlabeled_loss(std::span<const double> x,
                        std::span<const double> noise);

  // Loss of a whole batch under caller-supplied noise (one vector of
  // length latent_dim per example).  Pure evaluation, no gradients; used
  // by the finite-difference tests.
  double batch_loss(std::span<const std::span<const double>> labeled_x,
                    std::span<const int> labeled_y,
                    std::span<const std::span<const double>> unlabeled_x,
                    std::span<const std::vector<double>> labeled_noise,
                    std::span<const std::vector<double>> unlabeled_noise);

  // Same loss with analytic gradients accumulated into g_y/g_z/g_dec
  // (which must be congruent with the sub-networks; see zero-grad
  // factories below).  Returns the loss breakdown.
  ElboReport batch_gradients(
      std::span<const std::span<const double>> labeled_x,
      std::span<const int> labeled_y,
      std::span<const std::span<const double>> unlabeled_x,
      std::span<const std::vector<double>> labeled_noise,
      std::span<const std::vector<double>> unlabeled_noise, ParamGrads& g_y,
      ParamGrads& g_z, ParamGrads& g_dec);

  // One optimisation step on a mixed batch: draws one noise vector per
  // example from rng (labeled examples first, in order, then unlabeled),
  // computes gradients of total_loss and applies one update per
  // sub-network.  Throws std::invalid_argument when both batches are
  // empty or shapes are inconsistent.
  ElboReport objective_step(std::span<const std::span<const double>> labeled_x,
                            std::span<const int> labeled_y,
                            std::span<const std::span<const double>> unlabeled_x,
                            VaeOptimizer& opt, SeededRng& rng);

  DenseNet& encoder_y_net() { return encoder_y_; }
  DenseNet& encoder_z_net() { return encoder_z_; }
  DenseNet& decoder_net() { return decoder_; }
  const DenseNet& encoder_y_net() const { return encoder_y_; }
  const DenseNet& encoder_z_net() const { return encoder_z_; }
  const DenseNet& decoder_net() const { return decoder_; }

  // Checkpointing: a directory holding the three sub-networks plus a
  // small metadata file.  Throws std::runtime_error on I/O failure or
  // inconsistent contents.
  void save(const std::string& dir) const;
  static VaeModel load(const std::string& dir);

 private:
  VaeModel(VaeConfig config, DenseNet encoder_y, DenseNet encoder_z,
           DenseNet decoder);

  // Loss (and optionally gradients) of one example; weight scales this
  // example's contribution to the accumulated gradients.
  double labeled_term(std::span<const double> x, int y,
                      std::span<const double> noise, double weight,
                      ParamGrads* g_z, ParamGrads* g_dec);
  double unlabeled_term(std::span<const double> x,
                        std::span<const double> noise, double weight,
                        ParamGrads* g_y, ParamGrads* g_z, ParamGrads* g_dec);

  // Per-coordinate reconstruction NLL and its derivative in the decoder
  // output.
  double recon_nll(std::span<const double> g, std::span<const double> x) const;
  void recon_nll_grad(std::span<const double> g, std::span<const double> x,
                      double weight, double* out) const;

  VaeConfig config_;
  DenseNet encoder_y_;
  DenseNet encoder_z_;
  DenseNet decoder_;
};

}  // namespace bdrl
