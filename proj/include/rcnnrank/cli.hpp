#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rcnnrank/eval.hpp"
#include "rcnnrank/kbest.hpp"
#include "rcnnrank/params.hpp"

namespace rcnnrank::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kDataError = 2,
  kCheckFailed = 3,
};

/// One row of the UAS-versus-k table.
struct CurveRow {
  std::size_t k = 0;
  EvalResult oracle_best;
  EvalResult oracle_worst;
  EvalResult model_only;  // alpha = 1
  EvalResult reranker;    // alpha searched on the same lists
  double alpha = 0.0;
  std::size_t short_lists = 0;  // lists with fewer than k candidates
};

/// Truncates every list to its top k candidates for each k in `ks`.
std::vector<CurveRow> uas_curve(const ParamSet& params, std::span<const KBestList> lists,
                                std::span<const std::size_t> ks, double alpha_step,
                                const PunctSet& punct, unsigned jobs = 1);

/// TSV with header `k oracle_best oracle_worst rcnn reranker alpha flag`.
void write_curve(std::ostream& out, std::span<const CurveRow> rows);

/// Entry point of the `rcnn-rerank` tool. `args` excludes the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace rcnnrank::cli
