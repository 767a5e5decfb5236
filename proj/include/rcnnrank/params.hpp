#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rcnnrank/treebank.hpp"

namespace rcnnrank {

/// Model and optimiser hyperparameters. Defaults are the published settings
/// (m = m_d = 25, rho = 0.1, kappa = 2.0, lambda = 1e-4, k = 64).
struct Hyperparams {
  int word_dim = 25;          // m
  int distance_dim = 25;      // m_d
  double learning_rate = 0.1; // rho
  double margin_discount = 2.0;  // kappa
  double l2 = 1e-4;           // lambda
  int kbest = 64;             // k
  double alpha = 0.5;         // mixture weight, normally searched on dev
  int distance_clip = 10;

  /// Width of the concatenated unit input: head word, child phrase, distance.
  int input_dim() const { return 2 * word_dim + distance_dim; }

  /// Throws ConfigError unless every field is in range.
  void validate() const;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

inline constexpr std::string_view kUnknownWord = "<UNK>";
inline constexpr std::string_view kRootWord = "<ROOT>";
inline constexpr std::string_view kRootPos = "ROOT";

/// Word symbol table. Row 0 is UNK and row 1 is ROOT; the rest are sorted.
class Vocabulary {
 public:
  Vocabulary();
  explicit Vocabulary(std::span<const std::string> words);

  std::size_t size() const { return symbols_.size(); }
  /// Row of `word`, or the UNK row.
  int index(std::string_view word) const;
  bool contains(std::string_view word) const;
  const std::string& symbol(int row) const { return symbols_.at(row); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.symbols_ == b.symbols_;
  }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int, Hash, std::equal_to<>> rows_;
};

/// Vocabulary of words seen at least `min_count` times; rarer words fall to UNK.
Vocabulary build_vocabulary(std::span<const DependencyTree> trees, std::size_t min_count = 2);

/// Sorted set of POS tags in `trees`.
std::vector<std::string> collect_pos_tags(std::span<const DependencyTree> trees);

/// Composition matrix W (m x n) and score vector v (m) of one POS pair.
struct PairParams {
  Eigen::MatrixXd W;
  Eigen::VectorXd v;
};

/// (head POS, child POS).
using PosPair = std::pair<std::string, std::string>;

/// Orders PosPair keys and allows lookup by a pair of string_views.
struct PosPairLess {
  using is_transparent = void;
  template <typename A, typename B>
  bool operator()(const A& a, const B& b) const {
    const std::string_view a1 = a.first, b1 = b.first;
    if (a1 != b1) return a1 < b1;
    return std::string_view(a.second) < std::string_view(b.second);
  }
};

/// All trainable parameters plus the stream used to initialise new POS pairs.
///
/// Word vectors are the columns of `words`; distance vectors are the columns
/// of `distances`, column `delta + distance_clip` for a clipped offset.
/// POS pairs are created lazily by `touch_pair`; lookups of absent pairs
/// return `fallback`. `pairs` is a std::map so references stay valid.
struct ParamSet {
  Hyperparams hyper;
  Vocabulary vocab;
  std::vector<std::string> pos_tags;
  Eigen::MatrixXd words;
  Eigen::MatrixXd distances;
  std::map<PosPair, PairParams, PosPairLess> pairs;
  PairParams fallback;
  std::mt19937_64 rng;

  int word_row(std::string_view form) const { return vocab.index(form); }
  int distance_row(int delta) const;

  auto lookup_word(std::string_view form) { return words.col(word_row(form)); }
  auto lookup_word(std::string_view form) const { return words.col(word_row(form)); }
  auto lookup_distance(int delta) { return distances.col(distance_row(delta)); }
  auto lookup_distance(int delta) const { return distances.col(distance_row(delta)); }

  bool has_pair(std::string_view head_pos, std::string_view child_pos) const;
  /// Stored pair, or the fallback when absent.
  const PairParams& pair(std::string_view head_pos, std::string_view child_pos) const;
  /// Stored pair, created from `rng` on first touch.
  PairParams& touch_pair(std::string_view head_pos, std::string_view child_pos);
  /// `touch_pair` for every arc of `tree`, in node order.
  void touch_pairs(const DependencyTree& tree);

  /// Replaces the fallback with the element-wise mean of the stored pairs.
  /// No-op when nothing has been learned yet.
  void finalize_fallback();

  friend bool operator==(const ParamSet& a, const ParamSet& b);
};

/// POS tag of node `node` (0 is the artificial root).
std::string_view node_pos(const DependencyTree& tree, int node);
std::string_view node_form(const DependencyTree& tree, int node);

/// Fresh parameters with every entry drawn from the open interval
/// (-0.01, 0.01). Only the fallback pair is installed.
ParamSet init_random(const Hyperparams& hyper, Vocabulary vocab,
                     std::vector<std::string> pos_tags, std::uint64_t seed);

/// Overwrites the rows of in-vocabulary words from a word2vec text stream
/// and returns how many rows were written.
std::size_t load_pretrained(ParamSet& params, std::istream& vectors);

/// Versioned binary container; see docs/file-formats.md.
void save_model(const ParamSet& params, std::ostream& out);
ParamSet load_model(std::istream& in);

}  // namespace rcnnrank
