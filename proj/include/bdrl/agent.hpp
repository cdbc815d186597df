#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bdrl/dense_net.hpp"
#include "bdrl/environment.hpp"
#include "bdrl/features.hpp"
#include "bdrl/optimizer.hpp"
#include "bdrl/rng.hpp"
#include "bdrl/vae.hpp"

namespace bdrl {

enum class AgentMode { supervised, semi_supervised };

std::string to_string(AgentMode mode);
AgentMode agent_mode_from_string(const std::string& name);

// Flat MDP state: the three observation feature vectors concatenated,
// followed by the position normalised per axis into [0, 1].
std::vector<double> encode_state(const GridWorld& world,
                                 const AgentState& state);
std::size_t state_dim(const GridWorld& world, const FeatureConfig& features);

struct Transition {
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool terminal = false;
};

// Fixed-capacity FIFO experience replay with uniform sampling (with
// replacement) over the current contents.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return count_; }

  // Appends, evicting the oldest transition once full.
  void push(Transition t);

  // i-th oldest stored transition (0 = oldest).
  const Transition& at(std::size_t i) const;

  // n uniform draws over the contents.  Pointers stay valid until the
  // next push.  Throws std::logic_error when the buffer is empty.
  std::vector<const Transition*> sample(std::size_t n, SeededRng& rng) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> slots_;
  std::size_t next_ = 0;   // slot receiving the next push
  std::size_t count_ = 0;  // number of filled slots
};

// Optimizer pair for a Q-function: the main network (or head) plus an
// optional state for an unfrozen encoder trunk.
struct QOptimizer {
  OptimizerState head;
  std::optional<OptimizerState> trunk;

  static QOptimizer adam(double learning_rate, bool with_trunk);
  static QOptimizer sgd(double learning_rate, bool with_trunk);
};

// Action-value function over encoded states, one output per action.
//
// supervised: a single dense network state -> hidden1 -> hidden2 -> 8.
//
// semi_supervised: the mean of the three observation vectors passes
// through a trunk (a copy of the VAE class-encoder's hidden layer),
// whose output is concatenated with the normalised position and fed to a
// small head.  The trunk is frozen by default; unfreezing trains the
// copy without touching the VAE it came from.
class QFunction {
 public:
  static QFunction supervised(std::size_t state_dim, std::size_t hidden1,
                              std::size_t hidden2, SeededRng& rng);
  static QFunction semi_supervised(const VaeModel& vae,
                                   std::size_t head_hidden, bool freeze_trunk,
                                   SeededRng& rng);

  AgentMode mode() const { return mode_; }
  std::size_t state_dim() const { return state_dim_; }
  bool trunk_frozen() const { return freeze_trunk_; }

  // Q-values for a batch of encoded states (rows), shape R x 8.
  // Evaluation only; leaves no caches behind.
  Tensor q_batch(const Tensor& states);

  // Same, but keeps forward caches so backward_update() can follow.
  Tensor q_forward(const Tensor& states);

  // Backpropagates dq (R x 8) from the last q_forward() and applies one
  // optimizer step (head, then the trunk unless frozen).  Throws
  // std::logic_error without a pending q_forward().
  void backward_update(const Tensor& dq, QOptimizer& opt);

  // Q-values of one encoded state.
  std::vector<double> q_values(std::span<const double> state);

  DenseNet& head() { return head_; }
  const DenseNet& head() const { return head_; }
  DenseNet* trunk() { return trunk_ ? &*trunk_ : nullptr; }
  const DenseNet* trunk() const { return trunk_ ? &*trunk_ : nullptr; }

  // Snapshot I/O: head (and trunk when present) under the directory.
  void save(const std::string& dir) const;

 private:
  QFunction(AgentMode mode, std::size_t state_dim, std::size_t feature_dim,
            std::optional<DenseNet> trunk, DenseNet head, bool freeze_trunk);

  // Builds the trunk/head input(s) for a batch of encoded states.
  Tensor forward_impl(const Tensor& states, bool keep_cache);

  AgentMode mode_;
  std::size_t state_dim_;
  std::size_t feature_dim_;  // per-observation width (semi mode)
  std::optional<DenseNet> trunk_;
  DenseNet head_;
  bool freeze_trunk_ = true;
};

// Epsilon-greedy action choice.  epsilon must lie in [0, 1]; ties resolve
// to the lowest action index.
int select_action(QFunction& q, std::span<const double> state, double epsilon,
                  SeededRng& rng);

// Bellman target: r for terminal transitions, otherwise
// r + gamma * max_a Q(next_state, a).  Requires gamma in [0, 1).
double q_target(double reward, std::span<const double> next_state,
                bool terminal, QFunction& q, double gamma);

// One TD step on a minibatch: squared error between the (frozen) targets
// and Q(s, a), averaged over the batch, with gradient flowing only
// through Q(s, a).  Returns the loss.  Throws std::invalid_argument on an
// empty batch.
double td_update(QFunction& q, std::span<const Transition* const> batch,
                 QOptimizer& opt, double gamma);

// Pseudo-label for an unlabeled episode: argmax_y q(y | mean of the three
// observation vectors), mapped to its grid cell.
GridCell infer_label(VaeModel& vae, const AgentState& state,
                     const GridWorld& world);

// Training hyperparameters for one agent.
struct TrainConfig {
  AgentMode mode = AgentMode::supervised;
  FeatureConfig features;

  double gamma = 0.9;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t episodes = 200;  // epochs: full passes over the dataset
  int horizon = 10;            // max steps per episode
  std::size_t replay_capacity = 10000;
  std::size_t warmup = 32;     // min buffer size before updates start

  double epsilon_start = 1.0;
  double epsilon_end = 0.1;
  double epsilon_decay_fraction = 0.5;  // of episodes, linear decay span

  std::size_t q_hidden1 = 64;  // supervised net only
  std::size_t q_hidden2 = 32;  // second hidden layer / semi head hidden
  bool freeze_encoder = true;

  // Semi-supervised VAE pretraining.
  std::size_t vae_pretrain_epochs = 30;
  std::size_t vae_batch_size = 32;
  double vae_learning_rate = 1e-3;
  double vae_alpha = 0.0;  // <= 0: auto 0.1 * N_total / N_labeled
  std::size_t vae_latent_dim = 8;
  std::size_t vae_class_hidden = 64;
  std::size_t vae_z_hidden = 64;

  // Exploration rate for a given completed-epoch count (0 = first epoch).
  double epsilon_at(std::size_t epoch) const;

  void validate() const;
};

struct EpisodeStats {
  double total_reward = 0.0;
  double final_distance_m = 0.0;
  int steps = 0;
  bool labeled = false;
};

// One training episode: reset, (for unlabeled samples) infer the target
// with the VAE, then epsilon-greedy steps with replay writes and one TD
// update per step once the buffer has warmed up.  A zero horizon yields
// zeroed stats; starting on the target terminates immediately with the
// capped hit reward.  Throws std::logic_error when an unlabeled sample
// reaches a supervised agent (vae == nullptr).
EpisodeStats run_episode(const GridWorld& world,
                         const FingerprintSample& sample, QFunction& q,
                         VaeModel* vae, const TrainConfig& config,
                         double epsilon, ReplayBuffer& replay, QOptimizer& opt,
                         SeededRng& rng);

// Greedy evaluation episode from a fixed start cell (no exploration, no
// learning).  The sample must be labeled.
struct EvalEpisode {
  double total_reward = 0.0;
  double start_distance_m = 0.0;
  double final_distance_m = 0.0;
  int steps = 0;
};
EvalEpisode run_greedy_episode(const GridWorld& world,
                               const FingerprintSample& sample, QFunction& q,
                               const FeatureConfig& features, int horizon,
                               GridCell start);

// Per-epoch training metrics.  mean_distance_m averages the final
// distance of labeled episodes (falling back to all episodes when the
// epoch had none).
struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based, counts completed passes
  AgentMode mode = AgentMode::supervised;
  double mean_reward = 0.0;
  double mean_distance_m = 0.0;
  double epsilon = 0.0;
  double labeled_fraction = 0.0;
};

// Incremental trainer: owns the dataset, VAE (semi mode), Q-function,
// replay buffer, and RNG streams, and exposes one-epoch steps so callers
// can interleave evaluation at checkpoints.
//
// Model construction and VAE pretraining are deferred to the first
// run_epoch() (or an explicit prepare() call); a trainer that never runs
// leaves parameters untouched.  In supervised mode unlabeled samples are
// excluded from the episode schedule entirely.
class Trainer {
 public:
  Trainer(GridWorld world, std::vector<FingerprintSample> dataset,
          TrainConfig config, std::uint64_t seed);

  const GridWorld& world() const { return world_; }
  const TrainConfig& config() const { return config_; }

  // Builds the networks and (semi mode) pretrains the VAE.  Idempotent.
  void prepare();

  // One pass over the episode schedule.
  EpochMetrics run_epoch();

  std::size_t epochs_run() const { return epoch_; }
  std::size_t labeled_episode_count() const { return labeled_episodes_; }
  std::size_t unlabeled_episode_count() const { return unlabeled_episodes_; }

  QFunction& q();
  VaeModel* vae();
  const ReplayBuffer& replay() const { return replay_; }

  // Mode-guarded pseudo-labeling; std::logic_error in supervised mode.
  GridCell infer(const AgentState& state);

 private:
  void pretrain_vae();

  GridWorld world_;
  std::vector<FingerprintSample> dataset_;
  TrainConfig config_;
  std::uint64_t seed_;
  SeededRng episode_rng_;
  ReplayBuffer replay_;
  std::vector<std::size_t> schedule_;  // dataset indices per epoch

  bool ready_ = false;
  std::optional<VaeModel> vae_;
  std::optional<QFunction> q_;
  std::optional<QOptimizer> opt_;
  std::size_t epoch_ = 0;
  std::size_t labeled_episodes_ = 0;
  std::size_t unlabeled_episodes_ = 0;
};

// Convenience wrapper: runs config.episodes epochs and returns the
// trainer plus per-epoch metrics.
struct TrainResult {
  Trainer trainer;
  std::vector<EpochMetrics> metrics;
};
TrainResult train(const GridWorld& world,
                  std::vector<FingerprintSample> dataset,
                  const TrainConfig& config, std::uint64_t seed);

}  // namespace bdrl
