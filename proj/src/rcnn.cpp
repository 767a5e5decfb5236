#include "rcnnrank/rcnn.hpp"

#include <stdexcept>
#include <utility>

namespace rcnnrank {

Composition compose_pair(const ParamSet& params, const Eigen::Ref<const Eigen::VectorXd>& head_word,
                         const Eigen::Ref<const Eigen::VectorXd>& child_phrase, int delta,
                         const PairParams& pair) {
  const int m = params.hyper.word_dim;
  const int md = params.hyper.distance_dim;
  if (head_word.size() != m || child_phrase.size() != m || pair.W.rows() != m ||
      pair.W.cols() != 2 * m + md || pair.v.size() != m)
    throw std::logic_error("compose_pair: dimension mismatch");

  Composition c;
  c.input.resize(2 * m + md);
  c.input << head_word, child_phrase, params.lookup_distance(delta);
  c.pre_activation.noalias() = pair.W * c.input;
  c.hidden = c.pre_activation.array().tanh();
  return c;
}

NodeTrace forward_unit(const ParamSet& params, const DependencyTree& tree, int node,
                       std::span<const int> children,
                       std::span<const Eigen::VectorXd> child_phrases) {
  if (children.size() != child_phrases.size())
    throw std::logic_error("forward_unit: one phrase vector per child expected");

  NodeTrace t;
  t.node = node;
  t.word_row = params.word_row(node_form(tree, node));
  t.children.assign(children.begin(), children.end());
  const auto head_word = params.words.col(t.word_row);
  if (children.empty()) {
    t.phrase = head_word;
    return t;
  }

  const std::string_view head_pos = node_pos(tree, node);
  const std::size_t k = children.size();
  t.pair_keys.reserve(k);
  t.pairs.reserve(k);
  t.inputs.reserve(k);
  t.pre_activations.reserve(k);
  t.hidden.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const int child = children[i];
    const std::string_view child_pos = node_pos(tree, child);
    const PairParams& pair = params.pair(head_pos, child_pos);
    const int delta = child - node;

    Composition c = compose_pair(params, head_word, child_phrases[i], delta, pair);
    t.pair_keys.emplace_back(std::string(head_pos), std::string(child_pos));
    t.pairs.push_back(&pair);
    t.uses_fallback.push_back(&pair == &params.fallback);
    t.distance_rows.push_back(params.distance_row(delta));
    t.inputs.push_back(std::move(c.input));
    t.pre_activations.push_back(std::move(c.pre_activation));
    t.hidden.push_back(std::move(c.hidden));
  }

  const int m = params.hyper.word_dim;
  t.phrase.resize(m);
  t.pool_argmax.assign(m, 0);
  for (int j = 0; j < m; ++j) {
    int best = 0;
    for (std::size_t i = 1; i < k; ++i)
      if (t.hidden[i][j] > t.hidden[best][j]) best = static_cast<int>(i);
    t.pool_argmax[j] = best;
    t.phrase[j] = t.hidden[best][j];
  }

  for (std::size_t i = 0; i < k; ++i) t.unit_score += t.pairs[i]->v.dot(t.hidden[i]);
  return t;
}

NodeTrace forward_unit(const ParamSet& params, const DependencyTree& tree, int node,
                       std::span<const Eigen::VectorXd> child_phrases) {
  return forward_unit(params, tree, node, tree.children(node), child_phrases);
}

std::vector<int> post_order(const DependencyTree& tree) {
  std::vector<int> order;
  order.reserve(tree.size() + 1);
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    const auto& kids = tree.children(node);
    if (next < kids.size()) {
      const int child = kids[next++];
      stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

TreeForwardTrace score_tree(const ParamSet& params, const DependencyTree& tree) {
  TreeForwardTrace trace;
  const auto order = post_order(tree);
  trace.nodes.reserve(order.size());
  trace.position.assign(tree.size() + 1, -1);

  std::vector<Eigen::VectorXd> phrases;
  for (int node : order) {
    const auto& kids = tree.children(node);
    phrases.clear();
    for (int c : kids) phrases.push_back(trace.node(c).phrase);
    trace.position[node] = static_cast<int>(trace.nodes.size());
    trace.nodes.push_back(forward_unit(params, tree, node, kids, phrases));
    trace.total_score += trace.nodes.back().unit_score;
  }
  return trace;
}

namespace {

void add_to(std::map<int, Eigen::VectorXd>& rows, int row, const Eigen::Ref<const Eigen::VectorXd>& g) {
  auto [it, inserted] = rows.try_emplace(row, g);
  if (!inserted) it->second += g;
}

}  // namespace

void Gradients::merge(const Gradients& other, double scale) {
  for (const auto& [row, g] : other.words) add_to(words, row, scale * g);
  for (const auto& [row, g] : other.distances) add_to(distances, row, scale * g);
  for (const auto& [key, g] : other.pairs) {
    auto [it, inserted] = pairs.try_emplace(key, PairGradient{scale * g.W, scale * g.v});
    if (!inserted) {
      it->second.W += scale * g.W;
      it->second.v += scale * g.v;
    }
  }
  if (other.fallback) {
    if (!fallback) {
      fallback = PairGradient{scale * other.fallback->W, scale * other.fallback->v};
    } else {
      fallback->W += scale * other.fallback->W;
      fallback->v += scale * other.fallback->v;
    }
  }
}

void backward_tree(const ParamSet& params, const TreeForwardTrace& trace, double upstream,
                   Gradients& grads) {
  const int m = params.hyper.word_dim;
  const int md = params.hyper.distance_dim;

  // Gradient with respect to each node's phrase vector, filled by its parent.
  std::vector<Eigen::VectorXd> phrase_grad(trace.position.size(), Eigen::VectorXd::Zero(m));

  auto pair_grad = [&](const NodeTrace& t, std::size_t i) -> PairGradient& {
    if (t.uses_fallback[i]) {
      if (!grads.fallback)
        grads.fallback = PairGradient{Eigen::MatrixXd::Zero(m, 2 * m + md), Eigen::VectorXd::Zero(m)};
      return *grads.fallback;
    }
    auto it = grads.pairs.find(t.pair_keys[i]);
    if (it == grads.pairs.end())
      it = grads.pairs
               .emplace(t.pair_keys[i],
                        PairGradient{Eigen::MatrixXd::Zero(m, 2 * m + md), Eigen::VectorXd::Zero(m)})
               .first;
    return it->second;
  };

  for (auto it = trace.nodes.rbegin(); it != trace.nodes.rend(); ++it) {
    const NodeTrace& t = *it;
    const Eigen::VectorXd& g_phrase = phrase_grad[t.node];
    if (t.leaf()) {
      add_to(grads.words, t.word_row, g_phrase);
      continue;
    }

    // Score path: d(v.z)/dz = v. Pooling path: row j routes to its argmax child.
    std::vector<Eigen::VectorXd> g_hidden;
    g_hidden.reserve(t.children.size());
    for (std::size_t i = 0; i < t.children.size(); ++i) g_hidden.push_back(upstream * t.pairs[i]->v);
    for (int j = 0; j < m; ++j) g_hidden[t.pool_argmax[j]][j] += g_phrase[j];

    Eigen::VectorXd g_head_word = Eigen::VectorXd::Zero(m);
    for (std::size_t i = 0; i < t.children.size(); ++i) {
      const Eigen::VectorXd& z = t.hidden[i];
      PairGradient& gp = pair_grad(t, i);
      gp.v += upstream * z;

      const Eigen::VectorXd g_pre = g_hidden[i].array() * (1.0 - z.array().square());
      gp.W.noalias() += g_pre * t.inputs[i].transpose();
      const Eigen::VectorXd g_input = t.pairs[i]->W.transpose() * g_pre;

      g_head_word += g_input.head(m);
      phrase_grad[t.children[i]] += g_input.segment(m, m);
      add_to(grads.distances, t.distance_rows[i], g_input.tail(md));
    }
    add_to(grads.words, t.word_row, g_head_word);
  }
}

Gradients backward_tree(const ParamSet& params, const TreeForwardTrace& trace, double upstream) {
  Gradients g;
  backward_tree(params, trace, upstream, g);
  return g;
}

}  // namespace rcnnrank
