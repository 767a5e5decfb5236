#include <algorithm>
#include <cmath>
#include <functional>

#include "rcnnrank/trainer.hpp"

namespace rcnnrank {

namespace {

// Discrete state the hinge value is smooth within: the picked candidate,
// whether the hinge is active and every pooling routing on both trees.
struct Regime {
  std::size_t index = 0;
  bool active = false;
  std::vector<std::vector<int>> routing;

  bool operator==(const Regime&) const = default;
};

struct Evaluation {
  double violation = 0.0;
  Regime regime;
};

Evaluation evaluate(const ParamSet& params, const KBestList& kb, double kappa) {
  const MarginPick pick = loss_augmented_pick(params, kb, kappa);
  Evaluation e;
  e.violation = pick.violation;
  e.regime.index = pick.index;
  e.regime.active = pick.augmented_score > pick.gold_score;
  for (const auto* tree : {&kb.gold, &kb.candidates[pick.index].tree})
    for (const NodeTrace& t : score_tree(params, *tree).nodes) e.regime.routing.push_back(t.pool_argmax);
  return e;
}

}  // namespace

GradCheckReport grad_check(const ParamSet& params, const KBestList& kb, double epsilon,
                           double tolerance) {
  ParamSet p = params;
  p.touch_pairs(kb.gold);
  for (const auto& c : kb.candidates) p.touch_pairs(c.tree);
  const double kappa = p.hyper.margin_discount;

  const SentenceGradient analytic = sentence_subgradient(p, kb, kappa);
  const Evaluation base = evaluate(p, kb, kappa);

  GradCheckReport report;
  report.violation = analytic.pick.violation;
  report.hinge_active = base.regime.active;
  report.near_kink =
      std::abs(analytic.pick.augmented_score - analytic.pick.gold_score) < 100.0 * epsilon;

  // Every parameter either tree reads, whether or not its gradient is zero.
  Gradients touched;
  backward_tree(p, score_tree(p, kb.gold), 1.0, touched);
  backward_tree(p, score_tree(p, kb.candidates[analytic.pick.index].tree), 1.0, touched);

  auto check = [&](double& theta, double expected) {
    const double original = theta;
    theta = original + epsilon;
    const Evaluation plus = evaluate(p, kb, kappa);
    theta = original - epsilon;
    const Evaluation minus = evaluate(p, kb, kappa);
    theta = original;
    if (!(plus.regime == base.regime) || !(minus.regime == base.regime)) {
      ++report.skipped;
      return;
    }
    const double numeric = (plus.violation - minus.violation) / (2.0 * epsilon);
    const double scale = std::max({std::abs(expected), std::abs(numeric), kGradCheckFloor});
    report.max_rel_error = std::max(report.max_rel_error, std::abs(expected - numeric) / scale);
    ++report.checked;
  };

  auto entry = [](const auto& map, const auto& key, Eigen::Index i) {
    const auto it = map.find(key);
    return it == map.end() ? 0.0 : it->second[i];
  };

  for (const auto& [row, g] : touched.words)
    for (Eigen::Index j = 0; j < g.size(); ++j)
      check(p.words(j, row), entry(analytic.grads.words, row, j));
  for (const auto& [row, g] : touched.distances)
    for (Eigen::Index j = 0; j < g.size(); ++j)
      check(p.distances(j, row), entry(analytic.grads.distances, row, j));
  for (const auto& [key, g] : touched.pairs) {
    PairParams& theta = p.pairs.at(key);
    const auto it = analytic.grads.pairs.find(key);
    const PairGradient* a = it == analytic.grads.pairs.end() ? nullptr : &it->second;
    for (Eigen::Index c = 0; c < theta.W.cols(); ++c)
      for (Eigen::Index r = 0; r < theta.W.rows(); ++r) check(theta.W(r, c), a ? a->W(r, c) : 0.0);
    for (Eigen::Index r = 0; r < theta.v.size(); ++r) check(theta.v[r], a ? a->v[r] : 0.0);
  }

  report.passed = report.max_rel_error < tolerance;
  return report;
}

}  // namespace rcnnrank
