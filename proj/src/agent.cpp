#include "bdrl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "bdrl/snapshot.hpp"

#include <filesystem>

namespace bdrl {

std::string to_string(AgentMode mode) {
  return mode == AgentMode::supervised ? "supervised" : "semi_supervised";
}

AgentMode agent_mode_from_string(const std::string& name) {
  if (name == "supervised") return AgentMode::supervised;
  if (name == "semi_supervised") return AgentMode::semi_supervised;
  throw std::invalid_argument("unknown agent mode: " + name);
}

std::size_t state_dim(const GridWorld& world, const FeatureConfig& features) {
  if (features.beacon_count != world.beacons.size()) {
    throw std::invalid_argument("state_dim: feature config beacon count mismatch");
  }
  return 3 * feature_dim(features) + 2;
}

std::vector<double> encode_state(const GridWorld& world,
                                 const AgentState& state) {
  if (state.observations.size() != 3) {
    throw std::invalid_argument("encode_state: state must hold 3 observations");
  }
  const std::size_t f = state.observations.front().size();
  std::vector<double> encoded;
  encoded.reserve(3 * f + 2);
  for (const FeatureVector& obs : state.observations) {
    if (obs.size() != f) {
      throw std::invalid_argument("encode_state: observation width mismatch");
    }
    encoded.insert(encoded.end(), obs.values.begin(), obs.values.end());
  }
  const double row_span = world.rows > 1 ? world.rows - 1.0 : 1.0;
  const double col_span = world.cols > 1 ? world.cols - 1.0 : 1.0;
  encoded.push_back(state.position.row / row_span);
  encoded.push_back(state.position.col / col_span);
  return encoded;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) {
    throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  }
  slots_.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::push(Transition t) {
  if (count_ < capacity_) {
    slots_.push_back(std::move(t));
    ++count_;
  } else {
    slots_[next_] = std::move(t);
    next_ = (next_ + 1) % capacity_;
  }
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= count_) {
    throw std::invalid_argument("ReplayBuffer::at: index out of range");
  }
  if (count_ < capacity_) return slots_[i];
  return slots_[(next_ + i) % capacity_];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n,
                                                    SeededRng& rng) const {
  if (count_ == 0) {
    throw std::logic_error("ReplayBuffer::sample: buffer is empty");
  }
  std::vector<const Transition*> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(&at(rng.uniform_int(count_)));
  }
  return out;
}

QOptimizer QOptimizer::adam(double learning_rate, bool with_trunk) {
  QOptimizer opt{OptimizerState::adam(learning_rate), std::nullopt};
  if (with_trunk) opt.trunk = OptimizerState::adam(learning_rate);
  return opt;
}

QOptimizer QOptimizer::sgd(double learning_rate, bool with_trunk) {
  QOptimizer opt{OptimizerState::sgd(learning_rate), std::nullopt};
  if (with_trunk) opt.trunk = OptimizerState::sgd(learning_rate);
  return opt;
}

QFunction::QFunction(AgentMode mode, std::size_t state_dim,
                     std::size_t feature_dim, std::optional<DenseNet> trunk,
                     DenseNet head, bool freeze_trunk)
    : mode_(mode),
      state_dim_(state_dim),
      feature_dim_(feature_dim),
      trunk_(std::move(trunk)),
      head_(std::move(head)),
      freeze_trunk_(freeze_trunk) {}

QFunction QFunction::supervised(std::size_t state_dim, std::size_t hidden1,
                                std::size_t hidden2, SeededRng& rng) {
  if (state_dim == 0) {
    throw std::invalid_argument("QFunction: state_dim must be positive");
  }
  const LayerSpec specs[] = {{hidden1, Activation::relu},
                             {hidden2, Activation::relu},
                             {static_cast<std::size_t>(kActionCount),
                              Activation::identity}};
  return QFunction(AgentMode::supervised, state_dim, 0, std::nullopt,
                   DenseNet(state_dim, specs, rng), true);
}

QFunction QFunction::semi_supervised(const VaeModel& vae,
                                     std::size_t head_hidden,
                                     bool freeze_trunk, SeededRng& rng) {
  const std::size_t f = vae.input_dim();
  const DenseNet& enc = vae.encoder_y_net();
  const std::size_t h = enc.layer_width(0);

  // The trunk is an owned copy of the class-encoder's hidden layer, so
  // training it (when unfrozen) never mutates the VAE.
  const LayerSpec trunk_spec[] = {{h, enc.layer_activation(0)}};
  DenseNet trunk(f, trunk_spec);
  std::copy(enc.weights(0).data(), enc.weights(0).data() + enc.weights(0).size(),
            trunk.weights(0).data());
  trunk.biases(0) = enc.biases(0);

  const LayerSpec head_specs[] = {{head_hidden, Activation::relu},
                                  {static_cast<std::size_t>(kActionCount),
                                   Activation::identity}};
  DenseNet head(h + 2, head_specs, rng);
  return QFunction(AgentMode::semi_supervised, 3 * f + 2, f, std::move(trunk),
                   std::move(head), freeze_trunk);
}

Tensor QFunction::forward_impl(const Tensor& states, bool keep_cache) {
  if (states.cols() != state_dim_) {
    throw std::invalid_argument("QFunction: encoded state width mismatch");
  }
  if (mode_ == AgentMode::supervised) {
    Tensor out = head_.forward(states);
    if (!keep_cache) head_.clear_cache();
    return out;
  }

  const std::size_t rows = states.rows();
  const std::size_t f = feature_dim_;
  Tensor trunk_in = Tensor::matrix(rows, f);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* s = states.data() + r * state_dim_;
    double* t = trunk_in.data() + r * f;
    for (std::size_t i = 0; i < f; ++i) {
      t[i] = (s[i] + s[f + i] + s[2 * f + i]) / 3.0;
    }
  }
  Tensor h = trunk_->forward(trunk_in);
  if (!keep_cache || freeze_trunk_) trunk_->clear_cache();

  const std::size_t hw = h.cols();
  Tensor head_in = Tensor::matrix(rows, hw + 2);
  for (std::size_t r = 0; r < rows; ++r) {
    double* dst = head_in.data() + r * (hw + 2);
    std::copy(h.data() + r * hw, h.data() + (r + 1) * hw, dst);
    const double* s = states.data() + r * state_dim_;
    dst[hw] = s[3 * f];
    dst[hw + 1] = s[3 * f + 1];
  }
  Tensor out = head_.forward(head_in);
  if (!keep_cache) head_.clear_cache();
  return out;
}

Tensor QFunction::q_batch(const Tensor& states) {
  return forward_impl(states, false);
}

Tensor QFunction::q_forward(const Tensor& states) {
  return forward_impl(states, true);
}

void QFunction::backward_update(const Tensor& dq, QOptimizer& opt) {
  ParamGrads head_grads = head_.backward(dq);
  if (mode_ == AgentMode::semi_supervised && !freeze_trunk_) {
    if (!opt.trunk.has_value()) {
      throw std::invalid_argument(
          "QFunction: unfrozen trunk requires a trunk optimizer state");
    }
    // Route the head's input gradient (minus the position columns) into
    // the trunk before its weights change.
    const std::size_t rows = head_grads.input_grad.rows();
    const std::size_t hw = trunk_->output_dim();
    Tensor dtrunk = Tensor::matrix(rows, hw);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* src = head_grads.input_grad.data() + r * (hw + 2);
      std::copy(src, src + hw, dtrunk.data() + r * hw);
    }
    ParamGrads trunk_grads = trunk_->backward(dtrunk);
    apply_update(head_, head_grads, opt.head);
    apply_update(*trunk_, trunk_grads, *opt.trunk);
    return;
  }
  apply_update(head_, head_grads, opt.head);
}

std::vector<double> QFunction::q_values(std::span<const double> state) {
  Tensor out = q_batch(Tensor::vector({state.begin(), state.end()}));
  return {out.data(), out.data() + out.size()};
}

void QFunction::save(const std::string& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("QFunction::save: cannot create " + dir);
  save_net(head_, dir + "/q_head.net");
  if (trunk_) save_net(*trunk_, dir + "/q_trunk.net");
}

int select_action(QFunction& q, std::span<const double> state, double epsilon,
                  SeededRng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("select_action: epsilon must lie in [0, 1]");
  }
  if (rng.uniform() < epsilon) {
    return static_cast<int>(rng.uniform_int(kActionCount));
  }
  const std::vector<double> values = q.q_values(state);
  return static_cast<int>(
      std::max_element(values.begin(), values.end()) - values.begin());
}

double q_target(double reward, std::span<const double> next_state,
                bool terminal, QFunction& q, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("q_target: gamma must lie in [0, 1)");
  }
  if (terminal) return reward;
  const std::vector<double> values = q.q_values(next_state);
  return reward + gamma * *std::max_element(values.begin(), values.end());
}

double td_update(QFunction& q, std::span<const Transition* const> batch,
                 QOptimizer& opt, double gamma) {
  if (batch.empty()) {
    throw std::invalid_argument("td_update: empty minibatch");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("td_update: gamma must lie in [0, 1)");
  }
  const std::size_t dim = q.state_dim();
  const std::size_t n = batch.size();

  Tensor states = Tensor::matrix(n, dim);
  Tensor next_states = Tensor::matrix(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = *batch[i];
    if (t.state.size() != dim || t.next_state.size() != dim) {
      throw std::invalid_argument("td_update: transition state width mismatch");
    }
    if (t.action < 0 || t.action >= kActionCount) {
      throw std::invalid_argument("td_update: transition action out of range");
    }
    std::copy(t.state.begin(), t.state.end(), states.data() + i * dim);
    std::copy(t.next_state.begin(), t.next_state.end(),
              next_states.data() + i * dim);
  }

  // Targets are treated as constants: computed first, with no cache kept,
  // so no gradient ever flows through the next-state values.
  Tensor next_q = q.q_batch(next_states);
  std::vector<double> targets(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = *batch[i];
    if (t.terminal) {
      targets[i] = t.reward;
    } else {
      const double* row = next_q.data() + i * kActionCount;
      targets[i] = t.reward + gamma * *std::max_element(row, row + kActionCount);
    }
  }

  Tensor q_values = q.q_forward(states);
  Tensor dq = Tensor::matrix(n, kActionCount);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int a = batch[i]->action;
    const double delta = q_values.at(i, static_cast<std::size_t>(a)) - targets[i];
    loss += delta * delta;
    dq.at(i, static_cast<std::size_t>(a)) =
        2.0 * delta / static_cast<double>(n);
  }
  loss /= static_cast<double>(n);
  q.backward_update(dq, opt);
  return loss;
}

GridCell infer_label(VaeModel& vae, const AgentState& state,
                     const GridWorld& world) {
  if (static_cast<int>(vae.class_count()) != world.cell_count()) {
    throw std::invalid_argument("infer_label: VAE class count != grid cells");
  }
  if (state.observations.size() != 3) {
    throw std::invalid_argument("infer_label: state must hold 3 observations");
  }
  const std::vector<double> mean = feature_mean(state.observations);
  const std::vector<double> posterior = vae.classify(mean);
  const int best = static_cast<int>(
      std::max_element(posterior.begin(), posterior.end()) - posterior.begin());
  return world.class_to_cell(best);
}

double TrainConfig::epsilon_at(std::size_t epoch) const {
  const double span =
      epsilon_decay_fraction * static_cast<double>(episodes);
  if (span <= 0.0) return epsilon_end;
  const double t = std::min(1.0, static_cast<double>(epoch) / span);
  return epsilon_start + (epsilon_end - epsilon_start) * t;
}

void TrainConfig::validate() const {
  features.validate();
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("TrainConfig: gamma must lie in [0, 1)");
  }
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("TrainConfig: learning_rate must be positive");
  }
  if (batch_size == 0) {
    throw std::invalid_argument("TrainConfig: batch_size must be positive");
  }
  if (horizon < 0) {
    throw std::invalid_argument("TrainConfig: horizon must be >= 0");
  }
  if (replay_capacity == 0) {
    throw std::invalid_argument("TrainConfig: replay_capacity must be positive");
  }
  if (warmup == 0) {
    throw std::invalid_argument("TrainConfig: warmup must be positive");
  }
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(epsilon_start) || !in_unit(epsilon_end) ||
      !in_unit(epsilon_decay_fraction)) {
    throw std::invalid_argument("TrainConfig: epsilon parameters must lie in [0, 1]");
  }
  if (q_hidden1 == 0 || q_hidden2 == 0) {
    throw std::invalid_argument("TrainConfig: q hidden widths must be positive");
  }
  if (mode == AgentMode::semi_supervised) {
    if (vae_batch_size == 0) {
      throw std::invalid_argument("TrainConfig: vae_batch_size must be positive");
    }
    if (!(vae_learning_rate > 0.0)) {
      throw std::invalid_argument("TrainConfig: vae_learning_rate must be positive");
    }
    if (vae_latent_dim == 0 || vae_class_hidden == 0 || vae_z_hidden == 0) {
      throw std::invalid_argument("TrainConfig: VAE widths must be positive");
    }
  }
}

EpisodeStats run_episode(const GridWorld& world,
                         const FingerprintSample& sample, QFunction& q,
                         VaeModel* vae, const TrainConfig& config,
                         double epsilon, ReplayBuffer& replay, QOptimizer& opt,
                         SeededRng& rng) {
  if (!sample.labeled() && q.mode() == AgentMode::supervised) {
    throw std::logic_error(
        "run_episode: unlabeled sample reached a supervised agent");
  }
  if (!sample.labeled() && vae == nullptr) {
    throw std::logic_error("run_episode: unlabeled sample but no VAE attached");
  }

  AgentState state = reset(world, sample, config.features, rng);
  EpisodeStats stats;
  stats.labeled = sample.labeled();

  if (!sample.labeled()) {
    state.target = infer_label(*vae, state, world);
    state.target_inferred = true;
  }

  if (config.horizon <= 0) {
    stats.final_distance_m = world.cell_distance(state.position, *state.target);
    return stats;
  }
  if (state.position == *state.target) {
    stats.total_reward = reward(world, state.position, *state.target);
    stats.final_distance_m = 0.0;
    return stats;
  }

  while (!state.terminal) {
    const std::vector<double> encoded = encode_state(world, state);
    const int action = select_action(q, encoded, epsilon, rng);
    StepResult result = step(world, state, action, config.horizon);

    Transition transition;
    transition.state = encoded;
    transition.action = action;
    transition.reward = result.reward;
    transition.next_state = encode_state(world, result.next_state);
    transition.terminal = result.terminal;
    replay.push(std::move(transition));

    stats.total_reward += result.reward;
    ++stats.steps;
    state = std::move(result.next_state);

    if (replay.size() >= config.warmup) {
      const auto batch = replay.sample(config.batch_size, rng);
      td_update(q, batch, opt, config.gamma);
    }
  }
  stats.final_distance_m = world.cell_distance(state.position, *state.target);
  return stats;
}

EvalEpisode run_greedy_episode(const GridWorld& world,
                               const FingerprintSample& sample, QFunction& q,
                               const FeatureConfig& features, int horizon,
                               GridCell start) {
  if (!sample.labeled()) {
    throw std::invalid_argument("run_greedy_episode: sample must be labeled");
  }
  AgentState state = reset(world, sample, features, start);
  EvalEpisode eval;
  eval.start_distance_m = world.cell_distance(start, *state.target);

  if (horizon <= 0) {
    eval.final_distance_m = eval.start_distance_m;
    return eval;
  }
  if (state.position == *state.target) {
    eval.total_reward = reward(world, state.position, *state.target);
    return eval;
  }

  while (!state.terminal) {
    const std::vector<double> encoded = encode_state(world, state);
    const std::vector<double> values = q.q_values(encoded);
    const int action = static_cast<int>(
        std::max_element(values.begin(), values.end()) - values.begin());
    StepResult result = step(world, state, action, horizon);
    eval.total_reward += result.reward;
    ++eval.steps;
    state = std::move(result.next_state);
  }
  eval.final_distance_m = world.cell_distance(state.position, *state.target);
  return eval;
}

Trainer::Trainer(GridWorld world, std::vector<FingerprintSample> dataset,
                 TrainConfig config, std::uint64_t seed)
    : world_(std::move(world)),
      dataset_(std::move(dataset)),
      config_(std::move(config)),
      seed_(seed),
      episode_rng_(SeededRng(seed).derive("episodes")),
      replay_(config_.replay_capacity) {
  world_.validate();
  config_.validate();
  if (config_.features.beacon_count != world_.beacons.size()) {
    throw std::invalid_argument(
        "Trainer: feature config beacon count does not match the world");
  }
  if (dataset_.empty()) {
    throw std::invalid_argument("Trainer: dataset is empty");
  }
  for (std::size_t i = 0; i < dataset_.size(); ++i) {
    if (config_.mode == AgentMode::supervised && !dataset_[i].labeled()) {
      continue;  // supervised mode never schedules unlabeled samples
    }
    schedule_.push_back(i);
  }
  if (config_.mode == AgentMode::supervised && schedule_.empty()) {
    throw std::invalid_argument(
        "Trainer: supervised mode requires labeled samples");
  }
}

void Trainer::prepare() {
  if (ready_) return;
  const SeededRng base(seed_);

  if (config_.mode == AgentMode::semi_supervised) {
    std::size_t labeled = 0;
    for (const FingerprintSample& s : dataset_) {
      if (s.labeled()) ++labeled;
    }
    VaeConfig vc;
    vc.input_dim = feature_dim(config_.features);
    vc.class_count = static_cast<std::size_t>(world_.cell_count());
    vc.latent_dim = config_.vae_latent_dim;
    vc.class_hidden = config_.vae_class_hidden;
    vc.z_hidden = config_.vae_z_hidden;
    vc.decoder_hidden = config_.vae_z_hidden;
    vc.bernoulli_mask = bernoulli_mask_for(config_.features);
    if (config_.vae_alpha > 0.0) {
      vc.alpha = config_.vae_alpha;
    } else if (labeled > 0) {
      vc.alpha = 0.1 * static_cast<double>(dataset_.size()) /
                 static_cast<double>(labeled);
    } else {
      vc.alpha = 0.0;
    }
    SeededRng vae_init = base.derive("vae-init");
    vae_.emplace(vc, vae_init);
    pretrain_vae();
    SeededRng q_init = base.derive("q-init");
    q_.emplace(QFunction::semi_supervised(*vae_, config_.q_hidden2,
                                          config_.freeze_encoder, q_init));
  } else {
    SeededRng q_init = base.derive("q-init");
    q_.emplace(QFunction::supervised(state_dim(world_, config_.features),
                                     config_.q_hidden1, config_.q_hidden2,
                                     q_init));
  }
  opt_.emplace(QOptimizer::adam(
      config_.learning_rate,
      config_.mode == AgentMode::semi_supervised && !config_.freeze_encoder));
  ready_ = true;
}

void Trainer::pretrain_vae() {
  // Training unit: the mean of the three featurized scans per bundle
  // (matching what classification consumes at inference time).
  const auto layout = make_layout(config_.features);
  std::vector<std::vector<double>> xs;
  std::vector<int> ys;  // -1 for unlabeled
  xs.reserve(dataset_.size());
  ys.reserve(dataset_.size());
  for (const FingerprintSample& sample : dataset_) {
    if (sample.readings.size() != 3) {
      throw std::invalid_argument("Trainer: sample must hold exactly 3 scans");
    }
    std::vector<FeatureVector> scans;
    scans.reserve(3);
    for (const auto& scan : sample.readings) {
      scans.push_back(featurize(config_.features, scan, layout));
    }
    xs.push_back(feature_mean(scans));
    ys.push_back(sample.labeled() ? world_.cell_to_class(*sample.label) : -1);
  }

  SeededRng rng = SeededRng(seed_).derive("vae-pretrain");
  VaeOptimizer opt = VaeOptimizer::adam(config_.vae_learning_rate);
  std::vector<std::size_t> order(xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < config_.vae_pretrain_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform_int(i)]);
    }
    for (std::size_t begin = 0; begin < order.size();
         begin += config_.vae_batch_size) {
      const std::size_t end =
          std::min(begin + config_.vae_batch_size, order.size());
      std::vector<std::span<const double>> labeled_x;
      std::vector<int> labeled_y;
      std::vector<std::span<const double>> unlabeled_x;
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t idx = order[i];
        if (ys[idx] >= 0) {
          labeled_x.emplace_back(xs[idx]);
          labeled_y.push_back(ys[idx]);
        } else {
          unlabeled_x.emplace_back(xs[idx]);
        }
      }
      vae_->objective_step(labeled_x, labeled_y, unlabeled_x, opt, rng);
    }
  }
}

EpochMetrics Trainer::run_epoch() {
  prepare();
  const double epsilon = config_.epsilon_at(epoch_);

  double reward_sum = 0.0;
  double labeled_distance_sum = 0.0;
  double all_distance_sum = 0.0;
  std::size_t labeled_count = 0;

  for (std::size_t idx : schedule_) {
    const FingerprintSample& sample = dataset_[idx];
    const EpisodeStats stats =
        run_episode(world_, sample, *q_, vae_ ? &*vae_ : nullptr, config_,
                    epsilon, replay_, *opt_, episode_rng_);
    reward_sum += stats.total_reward;
    all_distance_sum += stats.final_distance_m;
    if (stats.labeled) {
      labeled_distance_sum += stats.final_distance_m;
      ++labeled_count;
      ++labeled_episodes_;
    } else {
      ++unlabeled_episodes_;
    }
  }

  ++epoch_;
  EpochMetrics metrics;
  metrics.epoch = epoch_;
  metrics.mode = config_.mode;
  metrics.epsilon = epsilon;
  const auto n = static_cast<double>(schedule_.size());
  metrics.mean_reward = reward_sum / n;
  metrics.mean_distance_m = labeled_count > 0
                                ? labeled_distance_sum / labeled_count
                                : all_distance_sum / n;
  metrics.labeled_fraction = static_cast<double>(labeled_count) / n;
  return metrics;
}

QFunction& Trainer::q() {
  prepare();
  return *q_;
}

VaeModel* Trainer::vae() {
  prepare();
  return vae_ ? &*vae_ : nullptr;
}

GridCell Trainer::infer(const AgentState& state) {
  if (config_.mode == AgentMode::supervised) {
    throw std::logic_error("Trainer::infer: label inference requires "
                           "semi-supervised mode");
  }
  prepare();
  return infer_label(*vae_, state, world_);
}

TrainResult train(const GridWorld& world,
                  std::vector<FingerprintSample> dataset,
                  const TrainConfig& config, std::uint64_t seed) {
  Trainer trainer(world, std::move(dataset), config, seed);
  std::vector<EpochMetrics> metrics;
  metrics.reserve(config.episodes);
  for (std::size_t epoch = 0; epoch < config.episodes; ++epoch) {
    metrics.push_back(trainer.run_epoch());
  }
  return TrainResult{std::move(trainer), std::move(metrics)};
}

}  // namespace bdrl
