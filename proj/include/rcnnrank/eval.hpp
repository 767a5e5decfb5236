#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "rcnnrank/kbest.hpp"
#include "rcnnrank/treebank.hpp"

namespace rcnnrank {

using PunctSet = std::set<std::string, std::less<>>;

/// Named punctuation sets: "ptb" ({`` '' , . :}) and "ctb" ({PU}).
/// A comma-separated tag list is accepted as a custom set.
PunctSet punct_preset(std::string_view name);

/// Attachment counts. Aggregates by summing counts, never by averaging ratios.
struct EvalResult {
  std::size_t correct_heads = 0;
  std::size_t scored_tokens = 0;

  /// correct / scored; 0 when nothing was scored.
  double uas() const {
    return scored_tokens == 0 ? 0.0
                              : static_cast<double>(correct_heads) /
                                    static_cast<double>(scored_tokens);
  }
  EvalResult& operator+=(const EvalResult& o) {
    correct_heads += o.correct_heads;
    scored_tokens += o.scored_tokens;
    return *this;
  }
  friend bool operator==(const EvalResult&, const EvalResult&) = default;
};

/// Unlabeled attachment score of `pred` against `gold`, skipping tokens whose
/// gold POS is in `punct`. Throws AlignmentError if the sentences differ.
EvalResult uas(const DependencyTree& pred, const DependencyTree& gold, const PunctSet& punct);

EvalResult corpus_uas(std::span<const DependencyTree> pred, std::span<const DependencyTree> gold,
                      const PunctSet& punct);

struct OracleChoice {
  std::size_t index = 0;
  EvalResult eval;
};

/// Candidate with the most (resp. fewest) correct heads; ties go to the
/// lowest index. Throws DomainError on an empty list.
OracleChoice oracle_best(const KBestList& kb, const PunctSet& punct);
OracleChoice oracle_worst(const KBestList& kb, const PunctSet& punct);

EvalResult corpus_oracle_best(std::span<const KBestList> lists, const PunctSet& punct);
EvalResult corpus_oracle_worst(std::span<const KBestList> lists, const PunctSet& punct);

}  // namespace rcnnrank
