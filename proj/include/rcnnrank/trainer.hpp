#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rcnnrank/eval.hpp"
#include "rcnnrank/kbest.hpp"
#include "rcnnrank/params.hpp"
#include "rcnnrank/rcnn.hpp"

namespace rcnnrank {

/// kappa times the number of tokens whose head differs between the trees.
double margin_delta(const DependencyTree& gold, const DependencyTree& cand, double kappa);

/// Result of loss-augmented selection over a k-best list.
struct MarginPick {
  std::size_t index = 0;
  double augmented_score = 0.0;  // s(cand) + delta(gold, cand)
  double gold_score = 0.0;
  double violation = 0.0;        // max(0, augmented - gold)
};

/// Candidate maximising s(cand) + delta(gold, cand); ties go to the lowest
/// index. The gold tree is scored directly whether or not it is listed.
MarginPick loss_augmented_pick(const ParamSet& params, const KBestList& kb, double kappa);

struct SentenceGradient {
  Gradients grads;
  MarginPick pick;
};

/// Subgradient of the sentence hinge term: d s(picked) - d s(gold), or
/// nothing when the hinge is inactive.
SentenceGradient sentence_subgradient(const ParamSet& params, const KBestList& kb, double kappa);

/// Diagonal AdaGrad with lazily applied L2.
///
/// For every parameter present in the gradient, g += lambda * theta, the
/// squared-gradient sum grows by g^2 and theta -= rho * g / (sqrt(sum) + eps).
/// Coordinates whose sum is still zero are left alone.
class AdaGrad {
 public:
  explicit AdaGrad(double rho, double epsilon = 0.0) : rho_(rho), epsilon_(epsilon) {}

  void step(ParamSet& params, const Gradients& grads, double lambda);

  double rho() const { return rho_; }
  const std::map<int, Eigen::VectorXd>& word_sums() const { return words_; }
  const std::map<int, Eigen::VectorXd>& distance_sums() const { return distances_; }
  const std::map<PosPair, PairGradient, PosPairLess>& pair_sums() const { return pairs_; }

 private:
  double rho_;
  double epsilon_;
  std::map<int, Eigen::VectorXd> words_;
  std::map<int, Eigen::VectorXd> distances_;
  std::map<PosPair, PairGradient, PosPairLess> pairs_;
  std::optional<PairGradient> fallback_;
};

struct TrainConfig {
  Hyperparams hyper;
  std::uint64_t seed = 1;
  int max_epochs = 20;
  int patience = 5;
  PunctSet punct = punct_preset("ptb");
  double adagrad_epsilon = 0.0;
};

struct TrainReport {
  int epoch = 0;
  std::size_t sentences = 0;
  double mean_loss = 0.0;     // mean hinge value over the epoch's updates
  std::size_t violations = 0; // sentences with a positive hinge
  EvalResult dev;             // model-only selection on the dev lists
  bool has_dev = false;

  friend bool operator==(const TrainReport&, const TrainReport&) = default;
};

struct TrainResult {
  ParamSet params;  // best-dev parameters with the fallback finalised
  std::vector<TrainReport> reports;
  int best_epoch = 0;
};

/// Per-sentence max-margin training. Sentences are put in a canonical order
/// and shuffled with `config.seed` every epoch, so the outcome does not
/// depend on file order. After each epoch the dev lists are re-ranked with
/// the model alone and the best parameters (first epoch on ties) are kept.
/// Without dev lists the last epoch wins. Stops after `max_epochs` or when
/// dev UAS has not improved for `patience` epochs.
TrainResult train(ParamSet params, std::span<const KBestList> train_lists,
                  std::span<const KBestList> dev_lists, const TrainConfig& config,
                  const std::function<void(const TrainReport&)>& on_epoch = {});

/// Finite-difference check of the hinge term.
struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;   // near a pooling tie, a re-pick or a hinge crossing
  bool hinge_active = false;
  bool near_kink = false;    // augmented and gold scores (nearly) coincide
  double violation = 0.0;
  bool passed = true;
};

/// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
/// A central difference of a hinge value near 10 carries ~1e-10 of rounding
/// noise at epsilon = 1e-5, so gradients below the floor are in effect
/// compared with an absolute tolerance of floor * tolerance.
inline constexpr double kGradCheckFloor = 1e-5;

/// Compares the analytic subgradient of the hinge term with central
/// differences for every parameter that the gold or picked tree touches.
/// Works on a copy of `params`; missing POS pairs are created in the copy.
GradCheckReport grad_check(const ParamSet& params, const KBestList& kb, double epsilon,
                           double tolerance);

}  // namespace rcnnrank
