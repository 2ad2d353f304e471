#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tagspan/model.hpp"

namespace tagspan {

struct TrainConfig {
  double lr = 5e-5;
  double warmup_ratio = 0.1;
  double weight_decay = 1e-2;
  int batch_size = 4;
  int epochs = 100;
  int layers = 3;
  int heads = 8;
  int max_span_width = 10;  // epsilon
  double alpha = 0.4;
  int width_dim = 150;
  int neg_spans = 100;
  int neg_relations = 100;
  int dim = 64;
  uint64_t seed = 42;
};

struct LossBreakdown {
  double tag = 0.0;
  double span = 0.0;
  double relation = 0.0;
  double joint = 0.0;
  long tag_instances = 0;
  long span_instances = 0;
  long pair_instances = 0;
};

// Mean cross-entropy of the gold labels' probabilities; probabilities are
// clamped to [eps, 1 - eps] before the log.
double tagging_loss(const Matrix& probs, const std::vector<int>& gold, double clamp_eps = 1e-12);
// Same, over span posteriors (gold types plus sampled none targets).
double span_loss(const Matrix& posteriors, const std::vector<int>& classes, double clamp_eps = 1e-12);
// Binary cross-entropy summed over relation types, averaged over pairs.
double relation_loss(const Matrix& scores, const Matrix& targets, double clamp_eps = 1e-12);

// Decoupled weight decay Adam; decay skips parameters flagged as biases or
// layer-norm affines.
class AdamW {
 public:
  AdamW(double weight_decay, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamStore& params, double lr);
  long steps_taken() const { return step_; }

 private:
  double weight_decay_, beta1_, beta2_, eps_;
  long step_ = 0;
  std::vector<Matrix> m_, v_;
};

// Piecewise-linear schedule: 0 -> lr over the warmup fraction of total steps,
// then lr -> 0. `step` is 1-based (the first update uses step 1).
double scheduled_lr(double base_lr, double warmup_ratio, long step, long total_steps);

// One optimizer update over a batch: joint loss with per-batch denominators,
// exact backprop, AdamW with the given learning rate. Aborts with the
// offending parameter group's name if a loss or gradient goes non-finite.
LossBreakdown joint_step(Model& model, const std::vector<Model::DocTargets>& batch, AdamW& opt,
                         double lr);

struct EpochLog {
  int epoch = 0;
  LossBreakdown loss;
  double lr = 0.0;
  double wall_time_s = 0.0;
};

struct TrainExample {
  AnnotatedDocument doc;
  Matrix embeddings;
};

// Full training loop: seeded epoch shuffling, per-epoch negative resampling,
// linear warmup/decay. Deterministic for a fixed (seed, example order).
// `should_stop`, when given, ends training early after an epoch; the learning
// rate schedule stays pinned to the full cfg.epochs horizon.
std::vector<EpochLog> train(Model& model, const std::vector<TrainExample>& examples,
                            const TrainConfig& cfg,
                            const std::function<void(const EpochLog&)>& on_epoch = {},
                            const std::function<bool(const EpochLog&)>& should_stop = {});

}  // namespace tagspan
