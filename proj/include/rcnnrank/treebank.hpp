#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rcnnrank {

/// One CoNLL-X row. `index` is the 1-based sentence position and `head` is
/// the index of the governing token, 0 meaning the artificial root.
struct Token {
  int index = 0;
  std::string form;
  std::string lemma = "_";
  std::string cpos = "_";
  std::string pos;
  std::string feats = "_";
  int head = 0;
  std::string deprel = "_";
  std::vector<std::string> extra;  // PHEAD, PDEPREL, ... kept for writing
};

enum class RootPolicy {
  kSingle,         // exactly one token attaches to the root
  kAllowMultiple,  // one or more
};

/// Returns a description of why `heads` (heads[i] is the head of token i+1)
/// is not a rooted tree, or nullopt if it is.
std::optional<std::string> check_heads(std::span<const int> heads,
                                       RootPolicy policy = RootPolicy::kSingle);

/// A validated dependency tree. Immutable once constructed.
///
/// Node 0 is the artificial root; nodes 1..size() are the tokens. Children
/// lists are kept in sentence order.
class DependencyTree {
 public:
  DependencyTree() : children_(1) {}

  /// Throws StructureError if token indices are not 1..n or the heads do
  /// not form a tree under `policy`.
  explicit DependencyTree(std::vector<Token> tokens,
                          RootPolicy policy = RootPolicy::kSingle);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }

  const std::vector<Token>& tokens() const { return tokens_; }
  const Token& token(int index) const { return tokens_.at(index - 1); }
  int head(int index) const { return token(index).head; }
  std::vector<int> heads() const;

  const std::vector<int>& children(int node) const { return children_.at(node); }

  /// Same tokens with a different head assignment; DEPREL is reset to "_".
  DependencyTree with_heads(std::span<const int> heads,
                            RootPolicy policy = RootPolicy::kSingle) const;

  /// True when both trees carry the same forms and POS tags.
  bool same_sentence(const DependencyTree& other) const;

 private:
  std::vector<Token> tokens_;
  std::vector<std::vector<int>> children_;
};

/// Reads blank-line separated CoNLL-X blocks.
std::vector<DependencyTree> parse_conll(std::istream& in,
                                        RootPolicy policy = RootPolicy::kSingle);

void write_conll(std::ostream& out, const DependencyTree& tree);
void write_conll(std::ostream& out, std::span<const DependencyTree> trees);

}  // namespace rcnnrank
