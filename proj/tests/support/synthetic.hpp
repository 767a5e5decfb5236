#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rcnnrank/kbest.hpp"
#include "rcnnrank/params.hpp"
#include "rcnnrank/treebank.hpp"

namespace rcnnrank::testing {

DependencyTree make_tree(const std::vector<std::string>& forms, const std::vector<std::string>& tags,
                         const std::vector<int>& heads);

/// Independent tree test: every token reaches 0 by following heads within n
/// steps, and (for a single root) exactly one token attaches to 0.
bool brute_force_is_tree(const std::vector<int>& heads, bool single_root);

/// Every head vector of length n (each head in 0..n), (n+1)^n of them.
std::vector<std::vector<int>> all_head_vectors(int n);

/// Every single-rooted tree over n tokens, by brute force.
std::vector<std::vector<int>> all_trees(int n);

/// Uniformly random attachment order; always a valid single-rooted tree.
std::vector<int> random_heads(int n, std::mt19937_64& rng);

/// Toy grammar: NP VB NP [IN NP] with NP = [DT] [JJ] NN.
/// 30 word types (DT 3, JJ 6, NN 12, VB 6, IN 3).
struct SyntheticOptions {
  std::size_t sentences = 50;
  std::size_t k = 8;          // gold plus k-1 corrupted trees
  int min_length = 5;
  int max_length = 8;
  double noise = 0.8;         // std-dev of the base-score noise
  std::uint64_t seed = 17;
};

/// Candidates are ordered by base score, which is -(wrong heads) + noise.
std::vector<KBestList> synthetic_corpus(const SyntheticOptions& options);

/// A random sentence of `length` tokens with `k` random candidate trees that
/// all differ from the gold tree.
KBestList random_instance(int length, std::size_t k, std::mt19937_64& rng);

/// init_random over the vocabulary/tags of `lists`, every pair the lists use
/// created, then every entry multiplied by `scale`.
ParamSet random_params(const Hyperparams& hyper, const std::vector<KBestList>& lists,
                       std::uint64_t seed, double scale);

}  // namespace rcnnrank::testing
