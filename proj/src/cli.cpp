#include "rcnnrank/cli.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "rcnnrank/config.hpp"
#include "rcnnrank/errors.hpp"
#include "rcnnrank/reranker.hpp"
#include "rcnnrank/trainer.hpp"
#include "text_util.hpp"

namespace rcnnrank::cli {

std::vector<CurveRow> uas_curve(const ParamSet& params, std::span<const KBestList> lists,
                                std::span<const std::size_t> ks, double alpha_step,
                                const PunctSet& punct, unsigned jobs) {
  // Scores of the full lists; a prefix of each is the truncated list's cache.
  const std::vector<ScoredList> full = score_lists(params, lists, false, jobs);
  std::vector<CurveRow> rows;
  for (std::size_t k : ks) {
    if (k == 0) throw DomainError("k must be positive");
    CurveRow row;
    row.k = k;
    std::vector<KBestList> cut;
    std::vector<ScoredList> scores;
    cut.reserve(lists.size());
    scores.reserve(lists.size());
    for (std::size_t i = 0; i < lists.size(); ++i) {
      if (lists[i].size() < k) ++row.short_lists;
      cut.push_back(lists[i].truncated(k));
      const std::size_t n = cut.back().size();
      scores.push_back({std::vector<double>(full[i].model.begin(), full[i].model.begin() + n),
                        std::vector<double>(full[i].base.begin(), full[i].base.begin() + n)});
    }
    row.oracle_best = corpus_oracle_best(cut, punct);
    row.oracle_worst = corpus_oracle_worst(cut, punct);
    row.model_only = evaluate_selection(scores, cut, 1.0, punct);
    const AlphaSearch search = search_alpha(scores, cut, alpha_step, punct);
    row.reranker = search.eval;
    row.alpha = search.alpha;
    rows.push_back(row);
  }
  return rows;
}

void write_curve(std::ostream& out, std::span<const CurveRow> rows) {
  out << "k\toracle_best\toracle_worst\trcnn\treranker\talpha\tflag\n";
  for (const auto& r : rows) {
    out << r.k << '\t' << r.oracle_best.uas() << '\t' << r.oracle_worst.uas() << '\t'
        << r.model_only.uas() << '\t' << r.reranker.uas() << '\t' << r.alpha << '\t'
        << (r.short_lists > 0 ? "short:" + std::to_string(r.short_lists) : std::string("ok")) << '\n';
  }
}

namespace {

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<KBestList> load_kbest(const std::string& gold_path, const std::string& kbest_path,
                                  const Settings& s, std::size_t k_max) {
  auto gold = open_in(gold_path);
  auto kbest = open_in(kbest_path);
  try {
    return read_kbest(gold, kbest, s.root_policy, k_max);
  } catch (const Error& e) {
    throw Error(gold_path + " / " + kbest_path + ": " + e.what());
  }
}

ParamSet load_model_file(const std::string& path) {
  auto in = open_in(path, true);
  try {
    return load_model(in);
  } catch (const LoadError& e) {
    throw LoadError(path + ": " + e.what());
  }
}

std::string fmt(double v) { return detail::format_double(v); }

std::string eval_fields(const EvalResult& r) {
  return "correct=" + std::to_string(r.correct_heads) + " scored=" + std::to_string(r.scored_tokens) +
         " uas=" + fmt(r.uas());
}

std::vector<std::size_t> parse_ks(const std::string& text) {
  std::vector<std::size_t> ks;
  for (auto field : detail::split(text, ',')) {
    const auto k = detail::parse_int<std::size_t>(detail::trim(field));
    if (!k || *k == 0) throw ConfigError("--ks expects positive integers, got '" + std::string(field) + "'");
    ks.push_back(*k);
  }
  return ks;
}

// Options shared by every subcommand: config file plus one flag per setting.
struct Common {
  std::string config_path;
  std::map<std::string, std::string> overrides;
  unsigned jobs = 1;
};

Settings resolve(const Common& c) {
  Settings s;
  if (!c.config_path.empty()) {
    auto in = open_in(c.config_path);
    read_settings(in, s);
  }
  for (const auto& [key, value] : c.overrides) apply_setting(s, key, value);
  s.train.hyper.validate();
  return s;
}

class UsageError : public Error {
 public:
  using Error::Error;
};

struct TrainArgs {
  std::string train_gold, train_kbest, dev_gold, dev_kbest, pretrained, model;
};

int run_train(const Common& common, const TrainArgs& a, std::ostream& out) {
  Settings s = resolve(common);
  if (a.dev_gold.empty() != a.dev_kbest.empty())
    throw UsageError("--dev-gold and --dev-kbest go together");
  const auto k = static_cast<std::size_t>(s.train.hyper.kbest);
  const auto train_lists = load_kbest(a.train_gold, a.train_kbest, s, k);
  std::vector<KBestList> dev_lists;
  if (!a.dev_gold.empty()) dev_lists = load_kbest(a.dev_gold, a.dev_kbest, s, k);

  std::vector<DependencyTree> golds;
  for (const auto& kb : train_lists) golds.push_back(kb.gold);
  ParamSet params = init_random(s.train.hyper, build_vocabulary(golds, s.unk_min_count),
                                collect_pos_tags(golds), s.train.seed);
  if (!a.pretrained.empty()) {
    auto in = open_in(a.pretrained);
    out << "pretrained_rows=" << load_pretrained(params, in) << '\n';
  }

  TrainResult result = train(std::move(params), train_lists, dev_lists, s.train,
                             [&](const TrainReport& r) {
                               out << "epoch=" << r.epoch << " sentences=" << r.sentences
                                   << " loss=" << fmt(r.mean_loss) << " violations=" << r.violations;
                               if (r.has_dev)
                                 out << " dev_correct=" << r.dev.correct_heads
                                     << " dev_scored=" << r.dev.scored_tokens
                                     << " dev_uas=" << fmt(r.dev.uas());
                               out << '\n';
                             });
  if (!dev_lists.empty()) {
    const AlphaSearch search = search_alpha(score_lists(result.params, dev_lists, false, common.jobs),
                                            dev_lists, s.alpha_step, s.train.punct);
    result.params.hyper.alpha = search.alpha;
    out << "alpha=" << fmt(search.alpha) << " dev_rerank_" << eval_fields(search.eval) << '\n';
  }
  std::ostringstream bytes;
  save_model(result.params, bytes);
  write_file(a.model, bytes.str());
  out << "best_epoch=" << result.best_epoch << " model=" << a.model << '\n';
  return kSuccess;
}

struct RerankArgs {
  std::string model, gold, kbest, dev_gold, dev_kbest, out, report;
  std::optional<double> alpha;
  bool search = false;
  bool with_oracle = false;
  bool normalize = false;
};

int run_rerank(const Common& common, const RerankArgs& a, std::ostream& out) {
  const Settings s = resolve(common);
  const ParamSet params = load_model_file(a.model);
  const auto lists = load_kbest(a.gold, a.kbest, s, static_cast<std::size_t>(params.hyper.kbest));
  const auto scores = score_lists(params, lists, a.with_oracle, common.jobs);

  double alpha = a.alpha.value_or(params.hyper.alpha);
  if (a.search) {
    if (a.dev_gold.empty() != a.dev_kbest.empty())
      throw UsageError("--dev-gold and --dev-kbest go together");
    AlphaSearch search;
    if (a.dev_gold.empty()) {
      search = search_alpha(scores, lists, s.alpha_step, s.train.punct, a.normalize);
    } else {
      const auto dev = load_kbest(a.dev_gold, a.dev_kbest, s, static_cast<std::size_t>(params.hyper.kbest));
      search = search_alpha(score_lists(params, dev, a.with_oracle, common.jobs), dev, s.alpha_step,
                            s.train.punct, a.normalize);
    }
    alpha = search.alpha;
    out << "searched_alpha=" << fmt(alpha) << " search_" << eval_fields(search.eval) << '\n';
  }
  RerankConfig config;
  config.alpha = alpha;
  config.include_oracle = a.with_oracle;
  config.normalize = a.normalize;
  config.validate();

  std::ostringstream conll, report;
  report << "sentence\tchosen_rank\tmodel_score\tbase_score\tmixture_score\n";
  EvalResult total;
  for (std::size_t i = 0; i < lists.size(); ++i) {
    const std::size_t chosen = select(scores[i], alpha, a.normalize);
    const DependencyTree& tree = candidate_tree(lists[i], chosen);
    total += uas(tree, lists[i].gold, s.train.punct);
    write_conll(conll, tree);
    const bool oracle = chosen == lists[i].size();
    report << i << '\t' << (oracle ? std::string("oracle") : std::to_string(chosen)) << '\t'
           << fmt(scores[i].model[chosen]) << '\t' << fmt(scores[i].base[chosen]) << '\t'
           << fmt(mixture_score(alpha, scores[i].model[chosen], scores[i].base[chosen])) << '\n';
  }
  if (!a.out.empty()) write_file(a.out, conll.str());
  if (!a.report.empty()) write_file(a.report, report.str());
  out << "alpha=" << fmt(alpha) << ' ' << eval_fields(total) << '\n';
  return kSuccess;
}

struct EvalArgs {
  std::string pred, gold, compare, punct_set, punct_tags;
  bool per_pos = false;
};

int run_eval(const Common& common, const EvalArgs& a, std::ostream& out) {
  const Settings s = resolve(common);
  PunctSet punct = s.train.punct;
  if (a.punct_set == "custom") punct = punct_preset(a.punct_tags);
  else if (!a.punct_set.empty()) punct = punct_preset(a.punct_set);

  auto pred_in = open_in(a.pred);
  auto gold_in = open_in(a.gold);
  const auto pred = parse_conll(pred_in, s.root_policy);
  const auto gold = parse_conll(gold_in, s.root_policy);
  out << eval_fields(corpus_uas(pred, gold, punct)) << '\n';

  if (a.per_pos || !a.compare.empty()) {
    const auto ours = per_pos_accuracy(pred, gold, punct);
    if (a.compare.empty()) {
      out << "pos\tcorrect\ttotal\taccuracy\n";
      for (const auto& [pos, c] : ours)
        out << pos << '\t' << c.correct << '\t' << c.total << '\t' << fmt(c.accuracy()) << '\n';
    } else {
      auto base_in = open_in(a.compare);
      const auto base_trees = parse_conll(base_in, s.root_policy);
      const auto base = per_pos_accuracy(base_trees, gold, punct);
      out << "pos\tbase\tours\timprovement\n";
      for (const auto& c : compare_pos(base, ours))
        out << c.pos << '\t' << fmt(c.base.accuracy()) << '\t' << fmt(c.ours.accuracy()) << '\t'
            << fmt(c.improvement) << '\n';
    }
  }
  return kSuccess;
}

struct GradCheckArgs {
  std::string gold, kbest, model;
  double epsilon = 1e-5;
  double tolerance = 1e-4;
};

int run_gradcheck(const Common& common, const GradCheckArgs& a, std::ostream& out) {
  const Settings s = resolve(common);
  const auto lists = load_kbest(a.gold, a.kbest, s, static_cast<std::size_t>(s.train.hyper.kbest));
  ParamSet params;
  if (a.model.empty()) {
    std::vector<DependencyTree> golds;
    for (const auto& kb : lists) golds.push_back(kb.gold);
    params = init_random(s.train.hyper, build_vocabulary(golds, 1), collect_pos_tags(golds),
                         s.train.seed);
  } else {
    params = load_model_file(a.model);
  }

  double worst = 0.0;
  std::size_t checked = 0, skipped = 0, kinks = 0;
  for (std::size_t i = 0; i < lists.size(); ++i) {
    const GradCheckReport r = grad_check(params, lists[i], a.epsilon, a.tolerance);
    out << "sentence=" << i << " max_rel_error=" << fmt(r.max_rel_error) << " checked=" << r.checked
        << " skipped=" << r.skipped << " hinge=" << (r.hinge_active ? "active" : "inactive")
        << (r.near_kink ? " near_kink" : "") << '\n';
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
    skipped += r.skipped;
    kinks += r.near_kink ? 1 : 0;
  }
  const bool ok = worst < a.tolerance;
  out << "max_rel_error=" << fmt(worst) << " checked=" << checked << " skipped=" << skipped
      << " near_kink=" << kinks << " tolerance=" << fmt(a.tolerance)
      << " result=" << (ok ? "pass" : "fail") << '\n';
  return ok ? kSuccess : kCheckFailed;
}

struct OracleArgs {
  std::string gold, kbest, model, out;
  std::optional<double> alpha;
  bool best = false, worst = false, with_oracle = false;
};

int run_oracle(const Common& common, const OracleArgs& a, std::ostream& out) {
  const Settings s = resolve(common);
  if (static_cast<int>(a.best) + static_cast<int>(a.worst) + static_cast<int>(a.with_oracle) != 1)
    throw UsageError("choose exactly one of --best, --worst, --with-oracle");

  std::vector<DependencyTree> chosen;
  EvalResult total;
  if (a.with_oracle) {
    if (a.model.empty()) throw UsageError("--with-oracle needs --model");
    const ParamSet params = load_model_file(a.model);
    const auto lists = load_kbest(a.gold, a.kbest, s, static_cast<std::size_t>(params.hyper.kbest));
    const auto scores = score_lists(params, lists, true, common.jobs);
    const double alpha = a.alpha.value_or(params.hyper.alpha);
    for (std::size_t i = 0; i < lists.size(); ++i) {
      chosen.push_back(candidate_tree(lists[i], select(scores[i], alpha)));
      total += uas(chosen.back(), lists[i].gold, s.train.punct);
    }
    out << "policy=with_oracle alpha=" << fmt(alpha) << ' ';
  } else {
    const auto lists = load_kbest(a.gold, a.kbest, s, static_cast<std::size_t>(s.train.hyper.kbest));
    for (const auto& kb : lists) {
      const OracleChoice c = a.best ? oracle_best(kb, s.train.punct) : oracle_worst(kb, s.train.punct);
      chosen.push_back(kb.candidates[c.index].tree);
      total += c.eval;
    }
    out << "policy=" << (a.best ? "best" : "worst") << ' ';
  }
  out << eval_fields(total) << '\n';
  if (!a.out.empty()) {
    std::ostringstream conll;
    write_conll(conll, chosen);
    write_file(a.out, conll.str());
  }
  return kSuccess;
}

struct CurveArgs {
  std::string model, gold, kbest, out;
  std::string ks = "1,2,3,4,5,6,7,8,9,10,32,64";
};

int run_curve(const Common& common, const CurveArgs& a, std::ostream& out) {
  const Settings s = resolve(common);
  const ParamSet params = load_model_file(a.model);
  const auto ks = parse_ks(a.ks);
  const auto lists = load_kbest(a.gold, a.kbest, s, 0);
  const auto rows = uas_curve(params, lists, ks, s.alpha_step, s.train.punct, common.jobs);
  if (a.out.empty()) {
    write_curve(out, rows);
  } else {
    std::ostringstream tsv;
    write_curve(tsv, rows);
    write_file(a.out, tsv.str());
  }
  return kSuccess;
}

void add_common(CLI::App& app, Common& common) {
  app.add_option("--config", common.config_path, "flat key = value settings file");
  app.add_option("--jobs", common.jobs, "worker threads for candidate scoring")->check(CLI::Range(1u, 256u));
  for (const auto& key : setting_keys()) {
    app.add_option_function<std::string>(
        "--" + key, [&common, key](const std::string& v) { common.overrides[key] = v; },
        "override setting '" + key + "'");
  }
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dependency k-best re-ranking with a recursive convolutional network", "rcnn-rerank"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  add_common(app, common);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "train a model on k-best lists");
  train_cmd->add_option("--train-gold", ta.train_gold, "gold CoNLL-X training trees")->required();
  train_cmd->add_option("--train-kbest", ta.train_kbest, "training k-best lists")->required();
  train_cmd->add_option("--dev-gold", ta.dev_gold, "gold CoNLL-X development trees");
  train_cmd->add_option("--dev-kbest", ta.dev_kbest, "development k-best lists");
  train_cmd->add_option("--pretrained", ta.pretrained, "word2vec text vectors");
  train_cmd->add_option("--model", ta.model, "output model file")->required();

  RerankArgs ra;
  auto* rerank_cmd = app.add_subcommand("rerank", "re-rank k-best lists with a model");
  rerank_cmd->add_option("--model", ra.model)->required();
  rerank_cmd->add_option("--gold", ra.gold, "CoNLL-X sentences (gold heads are used for scoring)")->required();
  rerank_cmd->add_option("--kbest", ra.kbest)->required();
  auto* alpha_opt = rerank_cmd->add_option("--alpha", ra.alpha, "mixture weight")->check(CLI::Range(0.0, 1.0));
  rerank_cmd->add_flag("--search-alpha", ra.search, "grid-search alpha")->excludes(alpha_opt);
  rerank_cmd->add_option("--dev-gold", ra.dev_gold, "search alpha on these trees instead");
  rerank_cmd->add_option("--dev-kbest", ra.dev_kbest);
  rerank_cmd->add_flag("--with-oracle", ra.with_oracle, "add the gold tree to every list");
  rerank_cmd->add_flag("--normalize", ra.normalize, "z-normalise scores per sentence");
  rerank_cmd->add_option("--out", ra.out, "CoNLL-X file of chosen trees");
  rerank_cmd->add_option("--report", ra.report, "TSV report of the choices");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "unlabeled attachment score");
  eval_cmd->add_option("--pred", ea.pred)->required();
  eval_cmd->add_option("--gold", ea.gold)->required();
  eval_cmd->add_option("--punct-set", ea.punct_set)->check(CLI::IsMember({"ptb", "ctb", "custom", "none"}));
  eval_cmd->add_option("--punct-tags", ea.punct_tags, "comma-separated tags for --punct-set custom");
  eval_cmd->add_flag("--per-pos", ea.per_pos, "accuracy per modifier POS");
  eval_cmd->add_option("--compare", ea.compare, "baseline predictions for a per-POS comparison");

  GradCheckArgs ga;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of the training gradient");
  grad_cmd->add_option("--gold", ga.gold)->required();
  grad_cmd->add_option("--kbest", ga.kbest)->required();
  grad_cmd->add_option("--model", ga.model, "model to check (default: fresh random parameters)");
  grad_cmd->add_option("--epsilon", ga.epsilon);
  grad_cmd->add_option("--tolerance", ga.tolerance);

  OracleArgs oa;
  auto* oracle_cmd = app.add_subcommand("oracle", "oracle selections over k-best lists");
  oracle_cmd->add_option("--gold", oa.gold)->required();
  oracle_cmd->add_option("--kbest", oa.kbest)->required();
  oracle_cmd->add_flag("--best", oa.best);
  oracle_cmd->add_flag("--worst", oa.worst);
  oracle_cmd->add_flag("--with-oracle", oa.with_oracle, "re-rank with the gold tree added");
  oracle_cmd->add_option("--model", oa.model);
  oracle_cmd->add_option("--alpha", oa.alpha)->check(CLI::Range(0.0, 1.0));
  oracle_cmd->add_option("--out", oa.out);

  CurveArgs ca;
  auto* curve_cmd = app.add_subcommand("curve", "UAS against k for oracles, model and re-ranker");
  curve_cmd->add_option("--model", ca.model)->required();
  curve_cmd->add_option("--gold", ca.gold)->required();
  curve_cmd->add_option("--kbest", ca.kbest)->required();
  curve_cmd->add_option("--ks", ca.ks, "comma-separated list sizes");
  curve_cmd->add_option("--out", ca.out);

  try {
    std::vector<const char*> argv{"rcnn-rerank"};
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    if (train_cmd->parsed()) return run_train(common, ta, out);
    if (rerank_cmd->parsed()) return run_rerank(common, ra, out);
    if (eval_cmd->parsed()) return run_eval(common, ea, out);
    if (grad_cmd->parsed()) return run_gradcheck(common, ga, out);
    if (oracle_cmd->parsed()) return run_oracle(common, oa, out);
    if (curve_cmd->parsed()) return run_curve(common, ca, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::logic_error& e) {
    err << "internal error: " << e.what() << '\n';
    return kCheckFailed;
  }
  return kUsage;
}

}  // namespace rcnnrank::cli
