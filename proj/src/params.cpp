#include "rcnnrank/params.hpp"

#include <algorithm>
#include <istream>
#include <set>
#include <string>

#include "rcnnrank/errors.hpp"
#include "text_util.hpp"

namespace rcnnrank {

void Hyperparams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(word_dim > 0, "m (word dimension) must be positive");
  require(distance_dim > 0, "m_d (distance dimension) must be positive");
  require(learning_rate > 0.0, "rho (learning rate) must be positive");
  require(margin_discount >= 0.0, "kappa (margin discount) must be non-negative");
  require(l2 >= 0.0, "lambda (L2 weight) must be non-negative");
  require(kbest > 0, "k must be positive");
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
  require(distance_clip > 0, "dist_clip must be positive");
}

Vocabulary::Vocabulary() : Vocabulary(std::span<const std::string>{}) {}

Vocabulary::Vocabulary(std::span<const std::string> words) {
  symbols_.emplace_back(kUnknownWord);
  symbols_.emplace_back(kRootWord);
  std::set<std::string, std::less<>> sorted(words.begin(), words.end());
  sorted.erase(std::string(kUnknownWord));
  sorted.erase(std::string(kRootWord));
  symbols_.insert(symbols_.end(), sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < symbols_.size(); ++i) rows_.emplace(symbols_[i], static_cast<int>(i));
}

int Vocabulary::index(std::string_view word) const {
  const auto it = rows_.find(word);
  return it == rows_.end() ? 0 : it->second;
}

bool Vocabulary::contains(std::string_view word) const { return rows_.find(word) != rows_.end(); }

Vocabulary build_vocabulary(std::span<const DependencyTree> trees, std::size_t min_count) {
  std::map<std::string, std::size_t, std::less<>> counts;
  for (const auto& tree : trees)
    for (const Token& t : tree.tokens()) ++counts[t.form];
  std::vector<std::string> kept;
  for (const auto& [word, count] : counts)
    if (count >= min_count) kept.push_back(word);
  return Vocabulary(kept);
}

std::vector<std::string> collect_pos_tags(std::span<const DependencyTree> trees) {
  std::set<std::string> tags;
  for (const auto& tree : trees)
    for (const Token& t : tree.tokens()) tags.insert(t.pos);
  return {tags.begin(), tags.end()};
}

std::string_view node_pos(const DependencyTree& tree, int node) {
  return node == 0 ? kRootPos : std::string_view(tree.token(node).pos);
}

std::string_view node_form(const DependencyTree& tree, int node) {
  return node == 0 ? kRootWord : std::string_view(tree.token(node).form);
}

namespace {

// Uniform on the open interval (-half, half).
double uniform_open(std::mt19937_64& rng, double half) {
  for (;;) {
    const double u = std::generate_canonical<double, 53>(rng);
    const double x = (2.0 * u - 1.0) * half;
    if (x > -half && x < half) return x;
  }
}

constexpr double kInitRange = 0.01;

void fill_uniform(Eigen::Ref<Eigen::MatrixXd> m, std::mt19937_64& rng) {
  // Column-major order, so the draw sequence matches the storage layout.
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = uniform_open(rng, kInitRange);
}

PairParams random_pair(const Hyperparams& h, std::mt19937_64& rng) {
  PairParams p{Eigen::MatrixXd(h.word_dim, h.input_dim()), Eigen::VectorXd(h.word_dim)};
  fill_uniform(p.W, rng);
  fill_uniform(p.v, rng);
  return p;
}

}  // namespace

int ParamSet::distance_row(int delta) const {
  const int clip = hyper.distance_clip;
  return std::clamp(delta, -clip, clip) + clip;
}

bool ParamSet::has_pair(std::string_view head_pos, std::string_view child_pos) const {
  return pairs.find(std::pair{head_pos, child_pos}) != pairs.end();
}

const PairParams& ParamSet::pair(std::string_view head_pos, std::string_view child_pos) const {
  const auto it = pairs.find(std::pair{head_pos, child_pos});
  return it == pairs.end() ? fallback : it->second;
}

PairParams& ParamSet::touch_pair(std::string_view head_pos, std::string_view child_pos) {
  auto it = pairs.find(std::pair{head_pos, child_pos});
  if (it == pairs.end()) {
    it = pairs.emplace(PosPair{std::string(head_pos), std::string(child_pos)},
                       random_pair(hyper, rng))
             .first;
  }
  PairParams& p = it->second;
  if (p.W.rows() != hyper.word_dim || p.W.cols() != hyper.input_dim() ||
      p.v.size() != hyper.word_dim)
    throw std::logic_error("POS pair parameters do not match n = 2m + m_d");
  return p;
}

void ParamSet::touch_pairs(const DependencyTree& tree) {
  for (int node = 0; node <= static_cast<int>(tree.size()); ++node)
    for (int child : tree.children(node)) touch_pair(node_pos(tree, node), node_pos(tree, child));
}

void ParamSet::finalize_fallback() {
  if (pairs.empty()) return;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(hyper.word_dim, hyper.input_dim());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(hyper.word_dim);
  for (const auto& [key, p] : pairs) {
    W += p.W;
    v += p.v;
  }
  const double n = static_cast<double>(pairs.size());
  fallback.W = W / n;
  fallback.v = v / n;
}

namespace {

bool same_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

bool same_pair(const PairParams& a, const PairParams& b) {
  return same_matrix(a.W, b.W) && a.v.size() == b.v.size() && a.v == b.v;
}

}  // namespace

bool operator==(const ParamSet& a, const ParamSet& b) {
  if (!(a.hyper == b.hyper && a.vocab == b.vocab && a.pos_tags == b.pos_tags)) return false;
  if (!same_matrix(a.words, b.words) || !same_matrix(a.distances, b.distances)) return false;
  if (!same_pair(a.fallback, b.fallback)) return false;
  if (a.pairs.size() != b.pairs.size()) return false;
  for (auto ia = a.pairs.begin(), ib = b.pairs.begin(); ia != a.pairs.end(); ++ia, ++ib)
    if (ia->first != ib->first || !same_pair(ia->second, ib->second)) return false;
  return a.rng == b.rng;
}

ParamSet init_random(const Hyperparams& hyper, Vocabulary vocab,
                     std::vector<std::string> pos_tags, std::uint64_t seed) {
  hyper.validate();
  ParamSet p;
  p.hyper = hyper;
  p.vocab = std::move(vocab);
  p.pos_tags = std::move(pos_tags);
  p.rng.seed(seed);
  p.distances.resize(hyper.distance_dim, 2 * hyper.distance_clip + 1);
  p.words.resize(hyper.word_dim, static_cast<Eigen::Index>(p.vocab.size()));
  fill_uniform(p.distances, p.rng);
  fill_uniform(p.words, p.rng);
  p.fallback = random_pair(hyper, p.rng);
  return p;
}

std::size_t load_pretrained(ParamSet& params, std::istream& vectors) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(vectors, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) break;
  }
  const auto header = detail::split_ws(line);
  if (header.size() != 2) throw ParseError(line_no, "expected header '<count> <dim>'");
  const auto count = detail::parse_int<std::size_t>(header[0]);
  const auto dim = detail::parse_int<int>(header[1]);
  if (!count || !dim) throw ParseError(line_no, "non-integer field in header");
  if (*dim != params.hyper.word_dim)
    throw FormatError("pretrained vectors have dimension " + std::to_string(*dim) +
                      " but the model uses m = " + std::to_string(params.hyper.word_dim));

  // Parse everything before touching the table so a bad line leaves it intact.
  std::vector<std::pair<int, Eigen::VectorXd>> rows;
  while (std::getline(vectors, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = detail::split_ws(line);
    if (fields.empty()) continue;
    if (static_cast<int>(fields.size()) != *dim + 1)
      throw ParseError(line_no, "expected a word and " + std::to_string(*dim) + " values, found " +
                                    std::to_string(fields.size()) + " fields");
    Eigen::VectorXd vec(*dim);
    for (int i = 0; i < *dim; ++i) {
      const auto v = detail::parse_double(fields[i + 1]);
      if (!v) throw ParseError(line_no, "malformed number '" + std::string(fields[i + 1]) + "'");
      vec[i] = *v;
    }
    if (params.vocab.contains(fields[0])) rows.emplace_back(params.vocab.index(fields[0]), vec);
  }
  for (const auto& [row, vec] : rows) params.words.col(row) = vec;
  return rows.size();
}

}  // namespace rcnnrank
