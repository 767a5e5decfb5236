#include "rcnnrank/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <tuple>

#include "rcnnrank/errors.hpp"
#include "rcnnrank/reranker.hpp"

namespace rcnnrank {

double margin_delta(const DependencyTree& gold, const DependencyTree& cand, double kappa) {
  if (gold.size() != cand.size())
    throw AlignmentError("candidate has " + std::to_string(cand.size()) + " tokens, gold has " +
                         std::to_string(gold.size()));
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const Token& g = gold.tokens()[i];
    const Token& c = cand.tokens()[i];
    if (g.form != c.form)
      throw AlignmentError("token " + std::to_string(i + 1) + " differs between gold and candidate");
    if (g.head != c.head) ++wrong;
  }
  return kappa * static_cast<double>(wrong);
}

MarginPick loss_augmented_pick(const ParamSet& params, const KBestList& kb, double kappa) {
  if (kb.candidates.empty()) throw DomainError("loss-augmented pick over an empty candidate list");
  MarginPick pick;
  pick.gold_score = score_tree(params, kb.gold).total_score;
  for (std::size_t i = 0; i < kb.candidates.size(); ++i) {
    const auto& cand = kb.candidates[i].tree;
    const double augmented = score_tree(params, cand).total_score + margin_delta(kb.gold, cand, kappa);
    if (i == 0 || augmented > pick.augmented_score) {
      pick.index = i;
      pick.augmented_score = augmented;
    }
  }
  pick.violation = std::max(0.0, pick.augmented_score - pick.gold_score);
  return pick;
}

SentenceGradient sentence_subgradient(const ParamSet& params, const KBestList& kb, double kappa) {
  SentenceGradient out;
  out.pick = loss_augmented_pick(params, kb, kappa);
  if (out.pick.violation <= 0.0) return out;
  backward_tree(params, score_tree(params, kb.candidates[out.pick.index].tree), 1.0, out.grads);
  backward_tree(params, score_tree(params, kb.gold), -1.0, out.grads);
  return out;
}

namespace {

template <typename Theta>
void adagrad_update(Theta&& theta, const Eigen::MatrixXd& grad, Eigen::MatrixXd& sums,
                    double lambda, double rho, double epsilon) {
  const Eigen::MatrixXd g = grad + lambda * theta;
  sums.array() += g.array().square();
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const double denom = std::sqrt(sums(r, c)) + epsilon;
      if (denom > 0.0) theta(r, c) -= rho * (g(r, c) / denom);
    }
  }
}

template <typename Theta>
void adagrad_update_vec(Theta&& theta, const Eigen::VectorXd& grad, Eigen::VectorXd& sums,
                        double lambda, double rho, double epsilon) {
  const Eigen::VectorXd g = grad + lambda * theta;
  sums.array() += g.array().square();
  for (Eigen::Index r = 0; r < g.size(); ++r) {
    const double denom = std::sqrt(sums[r]) + epsilon;
    if (denom > 0.0) theta[r] -= rho * (g[r] / denom);
  }
}

Eigen::VectorXd& sums_for(std::map<int, Eigen::VectorXd>& sums, int row, Eigen::Index dim) {
  auto it = sums.find(row);
  if (it == sums.end()) it = sums.emplace(row, Eigen::VectorXd::Zero(dim)).first;
  return it->second;
}

PairGradient zero_like(const PairParams& p) {
  return {Eigen::MatrixXd::Zero(p.W.rows(), p.W.cols()), Eigen::VectorXd::Zero(p.v.size())};
}

}  // namespace

void AdaGrad::step(ParamSet& params, const Gradients& grads, double lambda) {
  for (const auto& [row, g] : grads.words)
    adagrad_update_vec(params.words.col(row), g, sums_for(words_, row, g.size()), lambda, rho_,
                       epsilon_);
  for (const auto& [row, g] : grads.distances)
    adagrad_update_vec(params.distances.col(row), g, sums_for(distances_, row, g.size()), lambda,
                       rho_, epsilon_);
  for (const auto& [key, g] : grads.pairs) {
    PairParams& theta = params.touch_pair(key.first, key.second);
    auto it = pairs_.find(key);
    if (it == pairs_.end()) it = pairs_.emplace(key, zero_like(theta)).first;
    adagrad_update(theta.W, g.W, it->second.W, lambda, rho_, epsilon_);
    adagrad_update_vec(theta.v, g.v, it->second.v, lambda, rho_, epsilon_);
  }
  if (grads.fallback) {
    if (!fallback_) fallback_ = zero_like(params.fallback);
    adagrad_update(params.fallback.W, grads.fallback->W, fallback_->W, lambda, rho_, epsilon_);
    adagrad_update_vec(params.fallback.v, grads.fallback->v, fallback_->v, lambda, rho_, epsilon_);
  }
}

namespace {

// Sort key that orders training sentences by content, not by file position.
using ContentKey = std::tuple<std::vector<std::string>, std::vector<std::string>,
                              std::vector<std::vector<int>>, std::vector<double>>;

ContentKey content_key(const KBestList& kb) {
  ContentKey key;
  auto& [forms, tags, heads, scores] = key;
  for (const Token& t : kb.gold.tokens()) {
    forms.push_back(t.form);
    tags.push_back(t.pos);
  }
  heads.push_back(kb.gold.heads());
  for (const auto& c : kb.candidates) {
    heads.push_back(c.tree.heads());
    scores.push_back(c.base_score);
  }
  return key;
}

EvalResult model_only_eval(const ParamSet& params, std::span<const KBestList> lists,
                           const PunctSet& punct) {
  EvalResult total;
  RerankConfig config;
  config.alpha = 1.0;
  for (const auto& kb : lists) {
    const std::size_t chosen = rerank_sentence(params, kb, config);
    total += uas(candidate_tree(kb, chosen), kb.gold, punct);
  }
  return total;
}

}  // namespace

TrainResult train(ParamSet params, std::span<const KBestList> train_lists,
                  std::span<const KBestList> dev_lists, const TrainConfig& config,
                  const std::function<void(const TrainReport&)>& on_epoch) {
  if (train_lists.empty()) throw DomainError("training needs at least one sentence");
  if (config.max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (config.patience < 1) throw ConfigError("patience must be at least 1");
  params.hyper.validate();

  std::vector<ContentKey> keys;
  keys.reserve(train_lists.size());
  for (const auto& kb : train_lists) keys.push_back(content_key(kb));
  std::vector<std::size_t> order(train_lists.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  keys.clear();

  const double kappa = params.hyper.margin_discount;
  const double lambda = params.hyper.l2;
  AdaGrad optimizer(params.hyper.learning_rate, config.adagrad_epsilon);
  std::mt19937_64 shuffle_rng(config.seed);

  TrainResult result;
  std::size_t best_correct = 0;
  int stale = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    TrainReport report;
    report.epoch = epoch;
    report.sentences = order.size();
    double loss = 0.0;
    for (std::size_t idx : order) {
      const KBestList& kb = train_lists[idx];
      params.touch_pairs(kb.gold);
      for (const auto& c : kb.candidates) params.touch_pairs(c.tree);

      SentenceGradient sg = sentence_subgradient(params, kb, kappa);
      loss += sg.pick.violation;
      if (sg.pick.violation > 0.0) {
        ++report.violations;
        optimizer.step(params, sg.grads, lambda);
      }
    }
    report.mean_loss = loss / static_cast<double>(order.size());

    ParamSet snapshot = params;
    snapshot.finalize_fallback();
    bool improved = true;
    if (!dev_lists.empty()) {
      report.has_dev = true;
      report.dev = model_only_eval(snapshot, dev_lists, config.punct);
      improved = epoch == 1 || report.dev.correct_heads > best_correct;
    }
    if (improved) {
      best_correct = report.dev.correct_heads;
      result.params = std::move(snapshot);
      result.best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    result.reports.push_back(report);
    if (on_epoch) on_epoch(report);
    if (report.has_dev && stale >= config.patience) break;
  }
  return result;
}

}  // namespace rcnnrank
