#include "tagspan/training.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tagspan {

namespace {

double clamped_log(double p, double eps) {
  return std::log(std::min(std::max(p, eps), 1.0 - eps));
}

}  // namespace

double tagging_loss(const Matrix& probs, const std::vector<int>& gold, double clamp_eps) {
  if (gold.empty()) return 0.0;
  double sum = 0.0;
  for (size_t i = 0; i < gold.size(); ++i) sum -= clamped_log(probs(static_cast<int>(i), gold[i]), clamp_eps);
  return sum / static_cast<double>(gold.size());
}

double span_loss(const Matrix& posteriors, const std::vector<int>& classes, double clamp_eps) {
  return tagging_loss(posteriors, classes, clamp_eps);
}

double relation_loss(const Matrix& scores, const Matrix& targets, double clamp_eps) {
  if (scores.rows() == 0) return 0.0;
  double sum = 0.0;
  for (int i = 0; i < scores.rows(); ++i)
    for (int j = 0; j < scores.cols(); ++j) {
      const double y = targets(i, j);
      sum -= y * clamped_log(scores(i, j), clamp_eps) + (1.0 - y) * clamped_log(1.0 - scores(i, j), clamp_eps);
    }
  return sum / static_cast<double>(scores.rows());
}

void AdamW::step(ParamStore& params, double lr) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (int i = 0; i < params.size(); ++i) {
      m_[i].resize(params[i].value.rows(), params[i].value.cols());
      v_[i].resize(params[i].value.rows(), params[i].value.cols());
    }
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (int i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    Matrix& m = m_[i];
    Matrix& v = v_[i];
    const double decay = p.weight_decay ? weight_decay_ : 0.0;
    for (size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad.data()[k];
      m.data()[k] = beta1_ * m.data()[k] + (1.0 - beta1_) * g;
      v.data()[k] = beta2_ * v.data()[k] + (1.0 - beta2_) * g * g;
      const double mhat = m.data()[k] / bc1;
      const double vhat = v.data()[k] / bc2;
      double w = p.value.data()[k];
      w -= lr * (mhat / (std::sqrt(vhat) + eps_) + decay * w);
      p.value.data()[k] = w;
    }
  }
}

double scheduled_lr(double base_lr, double warmup_ratio, long step, long total_steps) {
  if (total_steps <= 0) return base_lr;
  const double warmup = warmup_ratio * static_cast<double>(total_steps);
  const double s = static_cast<double>(std::min(step, total_steps));
  if (warmup > 0.0 && s < warmup) return base_lr * s / warmup;
  if (total_steps == warmup) return base_lr;
  return base_lr * (static_cast<double>(total_steps) - s) / (static_cast<double>(total_steps) - warmup);
}

LossBreakdown joint_step(Model& model, const std::vector<Model::DocTargets>& batch, AdamW& opt,
                         double lr) {
  LossBreakdown loss;
  for (const auto& doc : batch) {
    loss.tag_instances += doc.tag_instances();
    loss.span_instances += doc.span_instances();
    loss.pair_instances += doc.pair_instances();
  }
  const double inv_tags = loss.tag_instances > 0 ? 1.0 / static_cast<double>(loss.tag_instances) : 0.0;
  const double inv_spans = loss.span_instances > 0 ? 1.0 / static_cast<double>(loss.span_instances) : 0.0;
  const double inv_pairs = loss.pair_instances > 0 ? 1.0 / static_cast<double>(loss.pair_instances) : 0.0;

  model.params().zero_grad();

  // Per-document graphs are independent; gradients are harvested in document
  // order afterwards so the reduction order (and hence the result) does not
  // depend on the thread count.
  const int count = static_cast<int>(batch.size());
  std::vector<std::vector<Matrix>> doc_grads(count);
  std::vector<Model::LossNodes> doc_losses(count);
  std::vector<std::string> doc_errors(count);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (int i = 0; i < count; ++i) {
    try {
      Tape tape;
      ParamBinder bind(tape, model.params());
      const auto nodes = model.training_loss(tape, bind, batch[i], inv_tags, inv_spans, inv_pairs);
      doc_losses[i] = nodes;
      if (nodes.total >= 0) {
        tape.backward(nodes.total);
        doc_grads[i] = bind.collect_grads();
      }
    } catch (const std::exception& e) {
      doc_errors[i] = e.what();
    }
  }
  for (int i = 0; i < count; ++i)
    if (!doc_errors[i].empty()) throw std::runtime_error("joint_step: " + doc_errors[i]);

  ParamStore& params = model.params();
  for (int i = 0; i < count; ++i) {
    loss.tag += doc_losses[i].tag_sum;
    loss.span += doc_losses[i].span_sum;
    loss.relation += doc_losses[i].rel_sum;
    for (size_t p = 0; p < doc_grads[i].size(); ++p) {
      const Matrix& g = doc_grads[i][p];
      if (g.empty()) continue;
      Matrix& acc = params[static_cast<int>(p)].grad;
      for (size_t k = 0; k < g.size(); ++k) acc.data()[k] += g.data()[k];
    }
  }
  loss.tag *= inv_tags;
  loss.span *= inv_spans;
  loss.relation *= inv_pairs;
  loss.joint = loss.tag + loss.span + loss.relation;

  if (!std::isfinite(loss.joint)) throw std::runtime_error("joint_step: non-finite loss");
  for (int p = 0; p < params.size(); ++p)
    if (!params[p].grad.all_finite())
      throw std::runtime_error("joint_step: non-finite gradient in parameter group " + params[p].name);

  opt.step(params, lr);
  return loss;
}

std::vector<EpochLog> train(Model& model, const std::vector<TrainExample>& examples,
                            const TrainConfig& cfg,
                            const std::function<void(const EpochLog&)>& on_epoch,
                            const std::function<bool(const EpochLog&)>& should_stop) {
  std::vector<EpochLog> logs;
  if (examples.empty()) return logs;
  const int batch_size = std::max(1, cfg.batch_size);
  const long batches_per_epoch = (static_cast<long>(examples.size()) + batch_size - 1) / batch_size;
  const long total_steps = batches_per_epoch * cfg.epochs;

  AdamW opt(cfg.weight_decay);
  Rng shuffle_rng(hash_string("shuffle", cfg.seed));
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<size_t> order(examples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);

    LossBreakdown epoch_loss;
    double lr_now = 0.0;
    for (size_t b = 0; b < static_cast<size_t>(batches_per_epoch); ++b) {
      std::vector<Model::DocTargets> batch;
      for (size_t i = b * batch_size; i < std::min(order.size(), (b + 1) * batch_size); ++i) {
        const auto& ex = examples[order[i]];
        if (ex.doc.size() == 0) continue;
        const uint64_t neg_seed =
            cfg.seed ^ hash_string("neg", (static_cast<uint64_t>(epoch) << 32) ^ order[i]);
        batch.push_back(model.make_targets(ex.doc, ex.embeddings, cfg.neg_spans, cfg.neg_relations,
                                           neg_seed));
      }
      if (batch.empty()) continue;
      ++step;
      lr_now = scheduled_lr(cfg.lr, cfg.warmup_ratio, step, total_steps);
      const LossBreakdown batch_loss = joint_step(model, batch, opt, lr_now);
      epoch_loss.tag += batch_loss.tag;
      epoch_loss.span += batch_loss.span;
      epoch_loss.relation += batch_loss.relation;
      epoch_loss.joint += batch_loss.joint;
      epoch_loss.tag_instances += batch_loss.tag_instances;
      epoch_loss.span_instances += batch_loss.span_instances;
      epoch_loss.pair_instances += batch_loss.pair_instances;
    }
    const double batches = static_cast<double>(batches_per_epoch);
    epoch_loss.tag /= batches;
    epoch_loss.span /= batches;
    epoch_loss.relation /= batches;
    epoch_loss.joint /= batches;

    EpochLog log;
    log.epoch = epoch;
    log.loss = epoch_loss;
    log.lr = lr_now;
    log.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    logs.push_back(log);
    if (on_epoch) on_epoch(log);
    if (should_stop && should_stop(log)) break;
  }
  return logs;
}

}  // namespace tagspan
