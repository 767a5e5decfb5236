#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rcnnrank/params.hpp"
#include "rcnnrank/treebank.hpp"

namespace rcnnrank {

/// Concatenated input p and hidden activation z of one (head, child) pair.
struct Composition {
  Eigen::VectorXd input;           // head word ++ child phrase ++ distance
  Eigen::VectorXd pre_activation;  // W p
  Eigen::VectorXd hidden;          // tanh(W p)
};

/// z = tanh(W (head_word ++ child_phrase ++ distance(delta))).
Composition compose_pair(const ParamSet& params, const Eigen::Ref<const Eigen::VectorXd>& head_word,
                         const Eigen::Ref<const Eigen::VectorXd>& child_phrase, int delta,
                         const PairParams& pair);

/// Everything the backward pass needs from one RCNN unit.
///
/// `pool_argmax[j]` is the position in `children` of the child whose hidden
/// vector supplied row j of `phrase`. A node without children is a leaf: its
/// phrase is its word vector and its score is 0.
struct NodeTrace {
  int node = 0;
  int word_row = 0;
  std::vector<int> children;
  std::vector<PosPair> pair_keys;
  std::vector<const PairParams*> pairs;
  std::vector<bool> uses_fallback;
  std::vector<int> distance_rows;
  std::vector<Eigen::VectorXd> inputs;
  std::vector<Eigen::VectorXd> pre_activations;
  std::vector<Eigen::VectorXd> hidden;
  std::vector<int> pool_argmax;
  Eigen::VectorXd phrase;
  double unit_score = 0.0;

  bool leaf() const { return children.empty(); }
};

/// Per-node traces in post-order (children before parents, siblings in
/// sentence order). The artificial root is the last entry.
struct TreeForwardTrace {
  std::vector<NodeTrace> nodes;
  std::vector<int> position;  // node id -> index into `nodes`
  double total_score = 0.0;

  const NodeTrace& node(int id) const { return nodes[position[id]]; }
};

/// Runs one unit over `children` (in the given order) of `node`.
/// `child_phrases[i]` is the phrase vector of `children[i]`.
NodeTrace forward_unit(const ParamSet& params, const DependencyTree& tree, int node,
                       std::span<const int> children,
                       std::span<const Eigen::VectorXd> child_phrases);

/// Same, over the children of `node` in sentence order.
NodeTrace forward_unit(const ParamSet& params, const DependencyTree& tree, int node,
                       std::span<const Eigen::VectorXd> child_phrases);

/// Scores `tree` bottom-up. Absent POS pairs use the fallback.
TreeForwardTrace score_tree(const ParamSet& params, const DependencyTree& tree);

/// Post-order node sequence used by score_tree.
std::vector<int> post_order(const DependencyTree& tree);

struct PairGradient {
  Eigen::MatrixXd W;
  Eigen::VectorXd v;
};

/// Sparse gradient: only parameters touched by some trace are present.
struct Gradients {
  std::map<int, Eigen::VectorXd> words;
  std::map<int, Eigen::VectorXd> distances;
  std::map<PosPair, PairGradient, PosPairLess> pairs;
  std::optional<PairGradient> fallback;

  bool empty() const {
    return words.empty() && distances.empty() && pairs.empty() && !fallback;
  }
  /// this += scale * other
  void merge(const Gradients& other, double scale = 1.0);
};

/// Gradient of upstream * trace.total_score with respect to every parameter
/// the trace touched, accumulated into `grads`.
void backward_tree(const ParamSet& params, const TreeForwardTrace& trace, double upstream,
                   Gradients& grads);
Gradients backward_tree(const ParamSet& params, const TreeForwardTrace& trace, double upstream);

}  // namespace rcnnrank
