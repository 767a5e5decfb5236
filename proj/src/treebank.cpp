#include "rcnnrank/treebank.hpp"

#include <istream>
#include <ostream>
#include <string>

#include "rcnnrank/errors.hpp"
#include "text_util.hpp"

namespace rcnnrank {

std::optional<std::string> check_heads(std::span<const int> heads, RootPolicy policy) {
  const int n = static_cast<int>(heads.size());
  if (n == 0) return std::nullopt;

  std::vector<std::vector<int>> children(n + 1);
  int roots = 0;
  for (int i = 1; i <= n; ++i) {
    const int h = heads[i - 1];
    if (h < 0 || h > n)
      return "token " + std::to_string(i) + " has out-of-range head " + std::to_string(h);
    if (h == i) return "token " + std::to_string(i) + " heads itself";
    if (h == 0) ++roots;
    children[h].push_back(i);
  }
  if (roots == 0) return std::string("no token attaches to the root");
  if (roots > 1 && policy == RootPolicy::kSingle)
    return std::to_string(roots) + " tokens attach to the root";

  // Everything must be reachable from the root; unreachable tokens sit on a cycle.
  std::vector<int> stack{0};
  int reached = 0;
  while (!stack.empty()) {
    const int node = stack.back();
    stack.pop_back();
    for (int c : children[node]) {
      ++reached;
      stack.push_back(c);
    }
  }
  if (reached != n) return std::string("head assignment contains a cycle");
  return std::nullopt;
}

DependencyTree::DependencyTree(std::vector<Token> tokens, RootPolicy policy)
    : tokens_(std::move(tokens)) {
  std::vector<int> hs;
  hs.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].index != static_cast<int>(i) + 1)
      throw StructureError("token " + std::to_string(i + 1) + " carries index " +
                           std::to_string(tokens_[i].index));
    hs.push_back(tokens_[i].head);
  }
  if (auto problem = check_heads(hs, policy)) throw StructureError(*problem);

  children_.assign(tokens_.size() + 1, {});
  for (const Token& t : tokens_) children_[t.head].push_back(t.index);
}

std::vector<int> DependencyTree::heads() const {
  std::vector<int> hs;
  hs.reserve(tokens_.size());
  for (const Token& t : tokens_) hs.push_back(t.head);
  return hs;
}

DependencyTree DependencyTree::with_heads(std::span<const int> heads, RootPolicy policy) const {
  if (heads.size() != tokens_.size())
    throw AlignmentError("head vector has " + std::to_string(heads.size()) +
                         " entries for a sentence of " + std::to_string(tokens_.size()));
  std::vector<Token> tokens = tokens_;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    tokens[i].head = heads[i];
    tokens[i].deprel = "_";
  }
  return DependencyTree(std::move(tokens), policy);
}

bool DependencyTree::same_sentence(const DependencyTree& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].form != other.tokens_[i].form) return false;
    if (tokens_[i].pos != other.tokens_[i].pos) return false;
  }
  return true;
}

namespace {

Token parse_row(std::string_view line, std::size_t line_no) {
  const auto cols = detail::split(line, '\t');
  if (cols.size() < 8)
    throw ParseError(line_no, "expected at least 8 tab-separated columns, found " +
                                  std::to_string(cols.size()));
  Token t;
  const auto id = detail::parse_int<int>(cols[0]);
  if (!id) throw ParseError(line_no, "non-integer ID '" + std::string(cols[0]) + "'");
  const auto head = detail::parse_int<int>(cols[6]);
  if (!head) throw ParseError(line_no, "non-integer HEAD '" + std::string(cols[6]) + "'");
  t.index = *id;
  t.form = cols[1];
  t.lemma = cols[2];
  t.cpos = cols[3];
  t.pos = cols[4];
  t.feats = cols[5];
  t.head = *head;
  t.deprel = cols[7];
  for (std::size_t i = 8; i < cols.size(); ++i) t.extra.emplace_back(cols[i]);
  return t;
}

}  // namespace

std::vector<DependencyTree> parse_conll(std::istream& in, RootPolicy policy) {
  std::vector<DependencyTree> trees;
  std::vector<Token> block;
  std::size_t block_start = 0;

  auto flush = [&] {
    if (block.empty()) return;
    for (std::size_t i = 0; i < block.size(); ++i) {
      if (block[i].index != static_cast<int>(i) + 1)
        throw ParseError(block_start + i, "expected ID " + std::to_string(i + 1) + ", found " +
                                              std::to_string(block[i].index));
    }
    try {
      trees.emplace_back(std::move(block), policy);
    } catch (const StructureError& e) {
      throw StructureError("sentence " + std::to_string(trees.size() + 1) + " (line " +
                           std::to_string(block_start) + "): " + e.what());
    }
    block.clear();
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) {
      flush();
      continue;
    }
    if (block.empty()) block_start = line_no;
    block.push_back(parse_row(line, line_no));
  }
  flush();
  return trees;
}

void write_conll(std::ostream& out, const DependencyTree& tree) {
  for (const Token& t : tree.tokens()) {
    out << t.index << '\t' << t.form << '\t' << t.lemma << '\t' << t.cpos << '\t' << t.pos
        << '\t' << t.feats << '\t' << t.head << '\t' << t.deprel;
    for (const auto& col : t.extra) out << '\t' << col;
    out << '\n';
  }
  out << '\n';
}

void write_conll(std::ostream& out, std::span<const DependencyTree> trees) {
  for (const auto& tree : trees) write_conll(out, tree);
}

}  // namespace rcnnrank
