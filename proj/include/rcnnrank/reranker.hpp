#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rcnnrank/eval.hpp"
#include "rcnnrank/kbest.hpp"
#include "rcnnrank/params.hpp"

namespace rcnnrank {

struct RerankConfig {
  double alpha = 1.0;
  double alpha_step = 0.005;
  bool include_oracle = false;  // append the gold tree as an extra candidate
  bool normalize = false;       // z-normalise model and base scores per sentence

  void validate() const;
};

/// alpha * model + (1 - alpha) * base.
inline double mixture_score(double alpha, double model_score, double base_score) {
  return alpha * model_score + (1.0 - alpha) * base_score;
}

/// Model and base scores of one list. With the oracle included, the gold
/// tree is the last entry and carries the list's highest base score.
struct ScoredList {
  std::vector<double> model;
  std::vector<double> base;

  std::size_t size() const { return model.size(); }
};

ScoredList score_list(const ParamSet& params, const KBestList& kb, bool include_oracle);

/// Scores every list; `jobs` > 1 spreads sentences over worker threads.
std::vector<ScoredList> score_lists(const ParamSet& params, std::span<const KBestList> lists,
                                    bool include_oracle, unsigned jobs = 1);

/// Index of the best mixture score, ties to the lowest index.
std::size_t select(const ScoredList& scores, double alpha, bool normalize = false);

std::size_t rerank_sentence(const ParamSet& params, const KBestList& kb, const RerankConfig& config);

/// Candidate `index` of `kb`; one past the last candidate names the gold tree.
const DependencyTree& candidate_tree(const KBestList& kb, std::size_t index);

/// Corpus UAS of the selections made at `alpha` over precomputed scores.
EvalResult evaluate_selection(std::span<const ScoredList> scores, std::span<const KBestList> lists,
                              double alpha, const PunctSet& punct, bool normalize = false);

/// {0, step, 2 step, ..., 1}. Throws DomainError unless 1/step is a whole number.
std::vector<double> alpha_grid(double step);

struct AlphaSearch {
  double alpha = 0.0;
  EvalResult eval;
  std::vector<std::pair<double, EvalResult>> grid;
};

/// Grid search for the alpha with the best corpus UAS, ties to the smaller alpha.
AlphaSearch search_alpha(std::span<const ScoredList> scores, std::span<const KBestList> lists,
                         double alpha_step, const PunctSet& punct, bool normalize = false);
AlphaSearch search_alpha(const ParamSet& params, std::span<const KBestList> dev, double alpha_step,
                         const PunctSet& punct);

struct PosCount {
  std::size_t correct = 0;
  std::size_t total = 0;

  double accuracy() const {
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  }
  friend bool operator==(const PosCount&, const PosCount&) = default;
};

/// Attachment accuracy keyed by the modifier's gold POS. Punctuation tags
/// do not appear.
std::map<std::string, PosCount> per_pos_accuracy(std::span<const DependencyTree> pred,
                                                 std::span<const DependencyTree> gold,
                                                 const PunctSet& punct);

struct PosComparison {
  std::string pos;
  PosCount base;
  PosCount ours;
  double improvement = 0.0;  // accuracy difference, ours - base
};

/// Tags present in either map, largest improvement first (ties by tag).
std::vector<PosComparison> compare_pos(const std::map<std::string, PosCount>& base,
                                       const std::map<std::string, PosCount>& ours);

}  // namespace rcnnrank
