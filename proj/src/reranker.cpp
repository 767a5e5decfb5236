#include "rcnnrank/reranker.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "rcnnrank/errors.hpp"
#include "rcnnrank/rcnn.hpp"

namespace rcnnrank {

void RerankConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(alpha_step > 0.0)) throw ConfigError("alpha_step must be positive");
}

ScoredList score_list(const ParamSet& params, const KBestList& kb, bool include_oracle) {
  if (kb.candidates.empty()) throw DomainError("re-ranking an empty candidate list");
  ScoredList out;
  out.model.reserve(kb.size() + 1);
  out.base.reserve(kb.size() + 1);
  for (const auto& c : kb.candidates) {
    out.model.push_back(score_tree(params, c.tree).total_score);
    out.base.push_back(c.base_score);
  }
  if (include_oracle) {
    out.model.push_back(score_tree(params, kb.gold).total_score);
    out.base.push_back(*std::max_element(out.base.begin(), out.base.end()));
  }
  return out;
}

std::vector<ScoredList> score_lists(const ParamSet& params, std::span<const KBestList> lists,
                                    bool include_oracle, unsigned jobs) {
  std::vector<ScoredList> out(lists.size());
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(lists.size())));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < lists.size(); ++i) out[i] = score_list(params, lists[i], include_oracle);
    return out;
  }
  // Strided split; each slot of `out` has exactly one writer.
  std::vector<std::exception_ptr> failures(jobs);
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < lists.size(); i += jobs)
            out[i] = score_list(params, lists[i], include_oracle);
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return out;
}

namespace {

std::vector<double> z_normalise(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(xs.size(), 0.0);
  if (sd > 0.0)
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = (xs[i] - mean) / sd;
  return out;
}

}  // namespace

std::size_t select(const ScoredList& scores, double alpha, bool normalize) {
  if (scores.size() == 0) throw DomainError("selection over an empty candidate list");
  const std::vector<double>* model = &scores.model;
  const std::vector<double>* base = &scores.base;
  std::vector<double> zm, zb;
  if (normalize) {
    zm = z_normalise(scores.model);
    zb = z_normalise(scores.base);
    model = &zm;
    base = &zb;
  }
  std::size_t best = 0;
  double best_score = mixture_score(alpha, (*model)[0], (*base)[0]);
  for (std::size_t i = 1; i < scores.size(); ++i) {
    const double s = mixture_score(alpha, (*model)[i], (*base)[i]);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

std::size_t rerank_sentence(const ParamSet& params, const KBestList& kb, const RerankConfig& config) {
  config.validate();
  return select(score_list(params, kb, config.include_oracle), config.alpha, config.normalize);
}

const DependencyTree& candidate_tree(const KBestList& kb, std::size_t index) {
  if (index == kb.candidates.size()) return kb.gold;
  return kb.candidates.at(index).tree;
}

EvalResult evaluate_selection(std::span<const ScoredList> scores, std::span<const KBestList> lists,
                              double alpha, const PunctSet& punct, bool normalize) {
  if (scores.size() != lists.size())
    throw AlignmentError("score cache does not match the k-best lists");
  EvalResult total;
  for (std::size_t i = 0; i < lists.size(); ++i)
    total += uas(candidate_tree(lists[i], select(scores[i], alpha, normalize)), lists[i].gold, punct);
  return total;
}

std::vector<double> alpha_grid(double step) {
  if (!(step > 0.0) || step > 1.0) throw DomainError("alpha step must lie in (0, 1]");
  const long long n = std::llround(1.0 / step);
  if (std::abs(static_cast<double>(n) * step - 1.0) > 1e-9)
    throw DomainError("alpha step must divide 1 into a whole number of steps");
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(n) + 1);
  for (long long i = 0; i <= n; ++i) grid.push_back(static_cast<double>(i) / static_cast<double>(n));
  return grid;
}

AlphaSearch search_alpha(std::span<const ScoredList> scores, std::span<const KBestList> lists,
                         double alpha_step, const PunctSet& punct, bool normalize) {
  AlphaSearch result;
  bool first = true;
  for (double alpha : alpha_grid(alpha_step)) {
    const EvalResult r = evaluate_selection(scores, lists, alpha, punct, normalize);
    result.grid.emplace_back(alpha, r);
    if (first || r.correct_heads > result.eval.correct_heads) {
      result.alpha = alpha;
      result.eval = r;
      first = false;
    }
  }
  return result;
}

AlphaSearch search_alpha(const ParamSet& params, std::span<const KBestList> dev, double alpha_step,
                         const PunctSet& punct) {
  const auto scores = score_lists(params, dev, false);
  return search_alpha(scores, dev, alpha_step, punct);
}

std::map<std::string, PosCount> per_pos_accuracy(std::span<const DependencyTree> pred,
                                                 std::span<const DependencyTree> gold,
                                                 const PunctSet& punct) {
  if (pred.size() != gold.size())
    throw AlignmentError(std::to_string(pred.size()) + " predicted sentences for " +
                         std::to_string(gold.size()) + " gold sentences");
  std::map<std::string, PosCount> counts;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (pred[s].size() != gold[s].size())
      throw AlignmentError("sentence " + std::to_string(s) + " differs in length");
    for (std::size_t i = 0; i < gold[s].size(); ++i) {
      const Token& g = gold[s].tokens()[i];
      const Token& p = pred[s].tokens()[i];
      if (p.form != g.form)
        throw AlignmentError("sentence " + std::to_string(s) + ", token " + std::to_string(i + 1) +
                             " differs");
      if (punct.contains(g.pos)) continue;
      PosCount& c = counts[g.pos];
      ++c.total;
      if (p.head == g.head) ++c.correct;
    }
  }
  return counts;
}

std::vector<PosComparison> compare_pos(const std::map<std::string, PosCount>& base,
                                       const std::map<std::string, PosCount>& ours) {
  std::map<std::string, PosComparison> merged;
  for (const auto& [pos, c] : base) {
    merged[pos].pos = pos;
    merged[pos].base = c;
  }
  for (const auto& [pos, c] : ours) {
    merged[pos].pos = pos;
    merged[pos].ours = c;
  }
  std::vector<PosComparison> out;
  for (auto& [pos, cmp] : merged) {
    cmp.improvement = cmp.ours.accuracy() - cmp.base.accuracy();
    out.push_back(cmp);
  }
  std::stable_sort(out.begin(), out.end(), [](const PosComparison& a, const PosComparison& b) {
    return a.improvement > b.improvement;
  });
  return out;
}

}  // namespace rcnnrank
