#include "rcnnrank/eval.hpp"

#include "rcnnrank/errors.hpp"
#include "text_util.hpp"

namespace rcnnrank {

PunctSet punct_preset(std::string_view name) {
  if (name == "ptb") return {"``", "''", ",", ".", ":"};
  if (name == "ctb") return {"PU"};
  if (name == "none" || name.empty()) return {};
  PunctSet custom;
  for (auto tag : detail::split(name, ',')) {
    tag = detail::trim(tag);
    if (!tag.empty()) custom.emplace(tag);
  }
  return custom;
}

EvalResult uas(const DependencyTree& pred, const DependencyTree& gold, const PunctSet& punct) {
  if (pred.size() != gold.size())
    throw AlignmentError("predicted tree has " + std::to_string(pred.size()) +
                         " tokens, gold has " + std::to_string(gold.size()));
  EvalResult r;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const Token& g = gold.tokens()[i];
    const Token& p = pred.tokens()[i];
    if (p.form != g.form)
      throw AlignmentError("token " + std::to_string(i + 1) + " differs: '" + p.form +
                           "' vs gold '" + g.form + "'");
    if (punct.contains(g.pos)) continue;
    ++r.scored_tokens;
    if (p.head == g.head) ++r.correct_heads;
  }
  return r;
}

EvalResult corpus_uas(std::span<const DependencyTree> pred, std::span<const DependencyTree> gold,
                      const PunctSet& punct) {
  if (pred.size() != gold.size())
    throw AlignmentError(std::to_string(pred.size()) + " predicted sentences for " +
                         std::to_string(gold.size()) + " gold sentences");
  EvalResult total;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    try {
      total += uas(pred[i], gold[i], punct);
    } catch (const AlignmentError& e) {
      throw AlignmentError("sentence " + std::to_string(i) + ": " + e.what());
    }
  }
  return total;
}

namespace {

template <typename Better>
OracleChoice oracle(const KBestList& kb, const PunctSet& punct, Better better) {
  if (kb.candidates.empty()) throw DomainError("oracle over an empty candidate list");
  OracleChoice choice{0, uas(kb.candidates[0].tree, kb.gold, punct)};
  for (std::size_t i = 1; i < kb.candidates.size(); ++i) {
    const EvalResult r = uas(kb.candidates[i].tree, kb.gold, punct);
    // scored_tokens is fixed by the gold tree, so counts compare like ratios.
    if (better(r.correct_heads, choice.eval.correct_heads)) choice = {i, r};
  }
  return choice;
}

}  // namespace

OracleChoice oracle_best(const KBestList& kb, const PunctSet& punct) {
  return oracle(kb, punct, [](std::size_t a, std::size_t b) { return a > b; });
}

OracleChoice oracle_worst(const KBestList& kb, const PunctSet& punct) {
  return oracle(kb, punct, [](std::size_t a, std::size_t b) { return a < b; });
}

EvalResult corpus_oracle_best(std::span<const KBestList> lists, const PunctSet& punct) {
  EvalResult total;
  for (const auto& kb : lists) total += oracle_best(kb, punct).eval;
  return total;
}

EvalResult corpus_oracle_worst(std::span<const KBestList> lists, const PunctSet& punct) {
  EvalResult total;
  for (const auto& kb : lists) total += oracle_worst(kb, punct).eval;
  return total;
}

}  // namespace rcnnrank
