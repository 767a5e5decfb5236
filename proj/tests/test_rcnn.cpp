#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "rcnnrank/params.hpp"
#include "rcnnrank/rcnn.hpp"
#include "rcnnrank/trainer.hpp"
#include "synthetic.hpp"

using namespace rcnnrank;
using rcnnrank::testing::make_tree;

namespace {

ParamSet params_for(const DependencyTree& tree, int m, int md, std::uint64_t seed, double scale = 1.0) {
  Hyperparams h;
  h.word_dim = m;
  h.distance_dim = md;
  std::vector<KBestList> lists{{tree, {}}};
  return rcnnrank::testing::random_params(h, lists, seed, scale);
}

const DependencyTree& red_bike() {
  static const DependencyTree t = make_tree({"a", "red", "bike"}, {"DT", "JJ", "NN"}, {3, 3, 0});
  return t;
}

std::vector<std::vector<int>> routing(const TreeForwardTrace& t) {
  std::vector<std::vector<int>> out;
  for (const auto& n : t.nodes) out.push_back(n.pool_argmax);
  return out;
}

struct FdResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

// Central differences of the total tree score, entry by entry, compared with
// backward_tree(upstream = 1). Entries whose perturbation changes a pooling
// winner are skipped.
FdResult finite_difference(ParamSet p, const DependencyTree& tree, double h) {
  const TreeForwardTrace base = score_tree(p, tree);
  const Gradients g = backward_tree(p, base, 1.0);
  const auto base_routing = routing(base);
  FdResult r;
  auto check = [&](double& theta, double analytic) {
    const double orig = theta;
    theta = orig + h;
    const TreeForwardTrace plus = score_tree(p, tree);
    theta = orig - h;
    const TreeForwardTrace minus = score_tree(p, tree);
    theta = orig;
    if (routing(plus) != base_routing || routing(minus) != base_routing) {
      ++r.skipped;
      return;
    }
    const double numeric = (plus.total_score - minus.total_score) / (2 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
    r.max_rel_error = std::max(r.max_rel_error, std::abs(analytic - numeric) / scale);
    ++r.checked;
  };
  auto get = [](const auto& map, const auto& key, Eigen::Index i) {
    const auto it = map.find(key);
    return it == map.end() ? 0.0 : it->second[i];
  };
  for (Eigen::Index c = 0; c < p.words.cols(); ++c)
    for (Eigen::Index j = 0; j < p.words.rows(); ++j) check(p.words(j, c), get(g.words, int(c), j));
  for (Eigen::Index c = 0; c < p.distances.cols(); ++c)
    for (Eigen::Index j = 0; j < p.distances.rows(); ++j)
      check(p.distances(j, c), get(g.distances, int(c), j));
  for (auto& [key, pair] : p.pairs) {
    const auto it = g.pairs.find(key);
    for (Eigen::Index c = 0; c < pair.W.cols(); ++c)
      for (Eigen::Index j = 0; j < pair.W.rows(); ++j)
        check(pair.W(j, c), it == g.pairs.end() ? 0.0 : it->second.W(j, c));
    for (Eigen::Index j = 0; j < pair.v.size(); ++j)
      check(pair.v[j], it == g.pairs.end() ? 0.0 : it->second.v[j]);
  }
  return r;
}

}  // namespace

TEST_CASE("compose_pair with a zero matrix gives zero activations") {
  ParamSet p = params_for(red_bike(), 3, 2, 1);
  PairParams pair{Eigen::MatrixXd::Zero(3, 8), Eigen::VectorXd::Ones(3)};
  const Composition c = compose_pair(p, Eigen::Vector3d(5, -4, 3), Eigen::Vector3d(1, 2, 3), 1, pair);
  CHECK(c.hidden == Eigen::VectorXd::Zero(3));
  CHECK(c.input.size() == 8);
  CHECK(c.input.tail(2) == Eigen::VectorXd(p.lookup_distance(1)));
}

TEST_CASE("compose_pair in one dimension") {
  ParamSet p = params_for(red_bike(), 1, 1, 1);
  PairParams pair{Eigen::RowVector3d(1, 0, 0), Eigen::VectorXd::Ones(1)};
  Eigen::VectorXd head(1), child(1);
  head << 0.37;
  child << -2.0;
  const Composition c = compose_pair(p, head, child, -1, pair);
  CHECK(c.hidden[0] == std::tanh(0.37));
}

TEST_CASE("compose_pair rejects mismatched dimensions") {
  ParamSet p = params_for(red_bike(), 3, 2, 1);
  PairParams bad{Eigen::MatrixXd::Zero(3, 7), Eigen::VectorXd::Zero(3)};
  CHECK_THROWS_AS(compose_pair(p, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), 0, bad),
                  std::logic_error);
}

TEST_CASE("activations stay strictly inside (-1, 1)") {
  std::mt19937_64 rng(5);
  ParamSet p = params_for(red_bike(), 4, 3, 2, 100.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd head(4), child(4);
    for (int i = 0; i < 4; ++i) {
      head[i] = u(rng);
      child[i] = u(rng);
    }
    const Composition c = compose_pair(p, head, child, trial % 21 - 10, p.pairs.begin()->second);
    CHECK(c.hidden.cwiseAbs().maxCoeff() < 1.0);
  }
}

TEST_CASE("forward_unit pools row-wise maxima") {
  // m = 2, m_d = 1: W = [0 | I | 0] makes z equal tanh of the child phrase.
  ParamSet p = params_for(red_bike(), 2, 1, 1);
  PairParams& pair = p.touch_pair("NN", "DT");
  pair.W.setZero();
  pair.W(0, 2) = 1.0;
  pair.W(1, 3) = 1.0;
  pair.v << 1.0, 2.0;
  p.touch_pair("NN", "JJ") = pair;

  const std::vector<Eigen::VectorXd> phrases{Eigen::Vector2d(std::atanh(0.5), std::atanh(-0.2)),
                                             Eigen::Vector2d(std::atanh(0.1), std::atanh(0.3))};
  const NodeTrace t = forward_unit(p, red_bike(), 3, phrases);
  CHECK(t.children == std::vector<int>{1, 2});
  CHECK(t.pool_argmax == std::vector<int>{0, 1});
  CHECK(t.phrase[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(t.phrase[1] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(t.unit_score == doctest::Approx((0.5 - 0.4) + (0.1 + 0.6)).epsilon(1e-12));
}

TEST_CASE("pooling ties go to the first child") {
  ParamSet p = params_for(red_bike(), 2, 1, 1);
  PairParams& pair = p.touch_pair("NN", "DT");
  pair.W.setZero();
  p.touch_pair("NN", "JJ") = pair;
  const std::vector<Eigen::VectorXd> phrases{Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 4)};
  const NodeTrace t = forward_unit(p, red_bike(), 3, phrases);
  CHECK(t.pool_argmax == std::vector<int>{0, 0});
}

TEST_CASE("single child unit") {
  const auto tree = make_tree({"runs"}, {"VB"}, {0});
  ParamSet p = params_for(tree, 3, 2, 4, 30.0);
  const TreeForwardTrace trace = score_tree(p, tree);
  REQUIRE(trace.nodes.size() == 2);
  const NodeTrace& root = trace.node(0);
  CHECK(root.children == std::vector<int>{1});
  CHECK(root.phrase == root.hidden[0]);
  const PairParams& pair = p.pair(kRootPos, "VB");
  CHECK(root.unit_score == pair.v.dot(root.hidden[0]));
  CHECK(trace.total_score == root.unit_score);
  CHECK(trace.node(1).unit_score == 0.0);

  const Gradients g = backward_tree(p, trace, 1.0);
  CHECK(g.pairs.at({std::string(kRootPos), "VB"}).v == root.hidden[0]);
}

TEST_CASE("leaves carry their word vector and score zero") {
  ParamSet p = params_for(red_bike(), 3, 2, 4, 30.0);
  const TreeForwardTrace trace = score_tree(p, red_bike());
  for (int leaf : {1, 2}) {
    const NodeTrace& t = trace.node(leaf);
    CHECK(t.leaf());
    CHECK(t.phrase == Eigen::VectorXd(p.lookup_word(node_form(red_bike(), leaf))));
    CHECK(t.unit_score == 0.0);
  }
}

TEST_CASE("a red bike decomposes into two units") {
  ParamSet p = params_for(red_bike(), 3, 2, 4, 30.0);
  const TreeForwardTrace trace = score_tree(p, red_bike());
  CHECK(post_order(red_bike()) == std::vector<int>{1, 2, 3, 0});
  CHECK(trace.nodes.size() == 4);
  const double bike = trace.node(3).unit_score;
  const double root = trace.node(0).unit_score;
  CHECK(bike != 0.0);
  CHECK(root != 0.0);
  CHECK(trace.total_score == bike + root);
  // The root unit consumes the pooled phrase of "bike".
  const Composition c = compose_pair(p, p.lookup_word(kRootWord), trace.node(3).phrase, 3,
                                     p.pair(kRootPos, "NN"));
  CHECK(c.hidden == trace.node(0).hidden[0]);
}

TEST_CASE("zero score vectors give zero tree scores") {
  rcnnrank::testing::SyntheticOptions o;
  o.sentences = 10;
  const auto lists = rcnnrank::testing::synthetic_corpus(o);
  Hyperparams h;
  h.word_dim = 3;
  h.distance_dim = 2;
  ParamSet p = rcnnrank::testing::random_params(h, lists, 2, 50.0);
  for (auto& [k, pair] : p.pairs) pair.v.setZero();
  p.fallback.v.setZero();
  for (const auto& kb : lists)
    for (const auto& c : kb.candidates) CHECK(score_tree(p, c.tree).total_score == 0.0);
}

TEST_CASE("zero upstream gives zero gradients") {
  ParamSet p = params_for(red_bike(), 3, 2, 4, 30.0);
  const Gradients g = backward_tree(p, score_tree(p, red_bike()), 0.0);
  for (const auto& [row, v] : g.words) CHECK(v.isZero(0.0));
  for (const auto& [row, v] : g.distances) CHECK(v.isZero(0.0));
  for (const auto& [key, pg] : g.pairs) {
    CHECK(pg.W.isZero(0.0));
    CHECK(pg.v.isZero(0.0));
  }
}

TEST_CASE("tree scores are sums of independently recomputed units") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 7;
    const KBestList kb = rcnnrank::testing::random_instance(n, 1, rng);
    ParamSet p = params_for(kb.gold, 3, 2, trial, 40.0);
    const TreeForwardTrace trace = score_tree(p, kb.gold);
    double sum = 0.0;
    for (const NodeTrace& t : trace.nodes) {
      std::vector<Eigen::VectorXd> phrases;
      for (int c : t.children) phrases.push_back(trace.node(c).phrase);
      const NodeTrace again = forward_unit(p, kb.gold, t.node, phrases);
      CHECK(again.unit_score == t.unit_score);
      CHECK(again.phrase == t.phrase);
      sum += again.unit_score;
      if (!t.leaf()) CHECK(t.phrase.cwiseAbs().maxCoeff() < 1.0);
    }
    CHECK(sum == trace.total_score);
  }
}

TEST_CASE("child enumeration order does not matter") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const KBestList kb = rcnnrank::testing::random_instance(6, 1, rng);
    ParamSet p = params_for(kb.gold, 3, 2, trial, 40.0);
    const TreeForwardTrace trace = score_tree(p, kb.gold);
    for (const NodeTrace& t : trace.nodes) {
      if (t.children.size() < 2) continue;
      std::vector<int> order = t.children;
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<Eigen::VectorXd> phrases;
      for (int c : order) phrases.push_back(trace.node(c).phrase);
      const NodeTrace shuffled = forward_unit(p, kb.gold, t.node, order, phrases);
      CHECK(shuffled.phrase == t.phrase);
      CHECK(shuffled.unit_score == doctest::Approx(t.unit_score).epsilon(1e-12));
    }
  }
}

TEST_CASE("backward_tree matches central differences") {
  std::mt19937_64 rng(21);
  double worst = 0.0;
  std::size_t checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 6;
    const KBestList kb = rcnnrank::testing::random_instance(n, 1, rng);
    ParamSet p = params_for(kb.gold, 3, 3, 100 + trial, 50.0);
    const FdResult r = finite_difference(p, kb.gold, 1e-5);
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
  }
  CHECK(checked > 1000);
  CHECK(worst < 1e-4);
}

TEST_CASE("gradients merge by scaled addition") {
  ParamSet p = params_for(red_bike(), 3, 2, 4, 30.0);
  const TreeForwardTrace trace = score_tree(p, red_bike());
  const Gradients once = backward_tree(p, trace, 1.0);
  Gradients twice = backward_tree(p, trace, 1.0);
  twice.merge(once, -3.0);
  const Gradients expected = backward_tree(p, trace, -2.0);
  for (const auto& [row, v] : expected.words) CHECK(twice.words.at(row).isApprox(v));
  for (const auto& [key, pg] : expected.pairs) CHECK(twice.pairs.at(key).W.isApprox(pg.W));
}

TEST_CASE("unseen pairs read the fallback") {
  ParamSet p = params_for(red_bike(), 3, 2, 4, 30.0);
  const auto other = make_tree({"a", "red", "bike"}, {"XX", "YY", "ZZ"}, {3, 3, 0});
  const TreeForwardTrace trace = score_tree(p, other);
  for (const NodeTrace& t : trace.nodes)
    for (std::size_t i = 0; i < t.children.size(); ++i) {
      CHECK(t.uses_fallback[i]);
      CHECK(t.pairs[i] == &p.fallback);
    }
  const Gradients g = backward_tree(p, trace, 1.0);
  CHECK(g.pairs.empty());
  CHECK(g.fallback.has_value());
}
