#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "rcnnrank/treebank.hpp"

namespace rcnnrank {

struct Candidate {
  DependencyTree tree;
  double base_score = 0.0;
};

/// Gold tree of one sentence plus the base parser's candidates in rank order.
/// Candidates share the gold tokens and differ only in heads.
struct KBestList {
  DependencyTree gold;
  std::vector<Candidate> candidates;

  std::size_t size() const { return candidates.size(); }
  /// First `k` candidates (all of them if fewer are available).
  KBestList truncated(std::size_t k) const;
};

/// Reads a gold CoNLL-X stream and the matching k-best stream:
///
///     SENT <sentence-index> <k>
///     CAND <rank> <base_score>
///     HEAD <h1> ... <hn>
///
/// Sentence indices and ranks are 0-based and must appear in order. When
/// `k_max` is non-zero, lists longer than that are cut to the top `k_max`.
std::vector<KBestList> read_kbest(std::istream& gold, std::istream& candidates,
                                  RootPolicy policy = RootPolicy::kSingle,
                                  std::size_t k_max = 0);

/// Writes the candidate half of `lists` in the format `read_kbest` accepts.
/// Scores are written in shortest round-trip form.
void write_kbest(std::ostream& out, std::span<const KBestList> lists);

}  // namespace rcnnrank
