#include "synthetic.hpp"

#include <algorithm>
#include <set>

namespace rcnnrank::testing {

DependencyTree make_tree(const std::vector<std::string>& forms, const std::vector<std::string>& tags,
                         const std::vector<int>& heads) {
  std::vector<Token> tokens;
  for (std::size_t i = 0; i < forms.size(); ++i) {
    Token t;
    t.index = static_cast<int>(i) + 1;
    t.form = forms[i];
    t.cpos = tags[i];
    t.pos = tags[i];
    t.head = heads[i];
    tokens.push_back(std::move(t));
  }
  return DependencyTree(std::move(tokens));
}

bool brute_force_is_tree(const std::vector<int>& heads, bool single_root) {
  const int n = static_cast<int>(heads.size());
  int roots = 0;
  for (int i = 1; i <= n; ++i) {
    const int h = heads[i - 1];
    if (h < 0 || h > n || h == i) return false;
    if (h == 0) ++roots;
    int node = i;
    int steps = 0;
    while (node != 0 && steps <= n) {
      node = heads[node - 1];
      ++steps;
    }
    if (node != 0) return false;
  }
  return single_root ? roots == 1 : roots >= 1;
}

std::vector<std::vector<int>> all_head_vectors(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> h(n, 0);
  while (true) {
    out.push_back(h);
    int i = 0;
    while (i < n && ++h[i] > n) h[i++] = 0;
    if (i == n) break;
  }
  return out;
}

std::vector<std::vector<int>> all_trees(int n) {
  std::vector<std::vector<int>> out;
  for (auto& h : all_head_vectors(n))
    if (brute_force_is_tree(h, true)) out.push_back(std::move(h));
  return out;
}

std::vector<int> random_heads(int n, std::mt19937_64& rng) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i + 1;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> heads(n, 0);
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> pick(0, i - 1);
    heads[order[i] - 1] = order[pick(rng)];
  }
  return heads;
}

namespace {

struct Word {
  std::string form;
  std::string tag;
};

const std::vector<std::string>& words_of(const std::string& tag) {
  static const std::vector<std::string> dt{"the", "a", "every"};
  static const std::vector<std::string> jj{"red", "big", "old", "quick", "small", "green"};
  static const std::vector<std::string> nn{"dog",  "cat",   "bike", "tree",  "house", "car",
                                           "bird", "child", "book", "river", "road",  "stone"};
  static const std::vector<std::string> vb{"sees", "likes", "finds", "takes", "wants", "hears"};
  static const std::vector<std::string> in{"with", "near", "of"};
  if (tag == "DT") return dt;
  if (tag == "JJ") return jj;
  if (tag == "NN") return nn;
  if (tag == "VB") return vb;
  return in;
}

template <typename Rng>
std::string draw(const std::string& tag, Rng& rng) {
  const auto& pool = words_of(tag);
  std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
  return pool[d(rng)];
}

// Appends an NP headed by its noun; returns the noun's 1-based position.
template <typename Rng>
int noun_phrase(std::vector<Word>& words, std::vector<int>& heads, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  const bool det = coin(rng);
  const bool adj = coin(rng);
  const int start = static_cast<int>(words.size()) + 1;
  const int noun = start + (det ? 1 : 0) + (adj ? 1 : 0);
  if (det) {
    words.push_back({draw("DT", rng), "DT"});
    heads.push_back(noun);
  }
  if (adj) {
    words.push_back({draw("JJ", rng), "JJ"});
    heads.push_back(noun);
  }
  words.push_back({draw("NN", rng), "NN"});
  heads.push_back(-1);
  return noun;
}

template <typename Rng>
std::pair<std::vector<Word>, std::vector<int>> sentence(const SyntheticOptions& o, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  while (true) {
    std::vector<Word> words;
    std::vector<int> heads;
    const int subject = noun_phrase(words, heads, rng);
    words.push_back({draw("VB", rng), "VB"});
    heads.push_back(0);
    const int verb = static_cast<int>(words.size());
    heads[subject - 1] = verb;
    const int object = noun_phrase(words, heads, rng);
    heads[object - 1] = verb;
    if (coin(rng)) {
      // "with" attaches to the verb; "near" and "of" to the object.
      const std::string prep = draw("IN", rng);
      words.push_back({prep, "IN"});
      heads.push_back(prep == "with" ? verb : object);
      const int in = static_cast<int>(words.size());
      const int pobj = noun_phrase(words, heads, rng);
      heads[pobj - 1] = in;
    }
    const int n = static_cast<int>(words.size());
    if (n >= o.min_length && n <= o.max_length) return {words, heads};
  }
}

std::vector<int> descendants_mask(const std::vector<int>& heads, int node) {
  const int n = static_cast<int>(heads.size());
  std::vector<int> mask(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    int x = i;
    for (int steps = 0; x != 0 && steps <= n; ++steps) {
      if (x == node) {
        mask[i] = 1;
        break;
      }
      x = heads[x - 1];
    }
  }
  return mask;
}

template <typename Rng>
std::vector<int> corrupt(const std::vector<int>& gold, Rng& rng) {
  const int n = static_cast<int>(gold.size());
  std::uniform_int_distribution<int> changes(1, 3);
  std::uniform_int_distribution<int> token(1, n);
  std::vector<int> heads = gold;
  const int count = changes(rng);
  for (int c = 0; c < count; ++c) {
    const int t = token(rng);
    if (heads[t - 1] == 0) continue;
    const auto below = descendants_mask(heads, t);
    std::vector<int> options;
    for (int h = 1; h <= n; ++h)
      if (!below[h] && h != heads[t - 1]) options.push_back(h);
    if (options.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
    heads[t - 1] = options[pick(rng)];
  }
  return heads;
}

int wrong_heads(const std::vector<int>& a, const std::vector<int>& b) {
  int n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i];
  return n;
}

}  // namespace

std::vector<KBestList> synthetic_corpus(const SyntheticOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> noise(0.0, o.noise);
  std::vector<KBestList> out;
  for (std::size_t s = 0; s < o.sentences; ++s) {
    auto [words, gold_heads] = sentence(o, rng);
    std::vector<std::string> forms, tags;
    for (const auto& w : words) {
      forms.push_back(w.form);
      tags.push_back(w.tag);
    }
    KBestList kb;
    kb.gold = make_tree(forms, tags, gold_heads);

    std::set<std::vector<int>> seen{gold_heads};
    std::vector<std::pair<double, std::vector<int>>> cands{{noise(rng), gold_heads}};
    for (int attempts = 0; cands.size() < o.k && attempts < 1000; ++attempts) {
      auto heads = corrupt(gold_heads, rng);
      if (!seen.insert(heads).second) continue;
      cands.emplace_back(-wrong_heads(heads, gold_heads) + noise(rng), std::move(heads));
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (auto& [score, heads] : cands) kb.candidates.push_back({kb.gold.with_heads(heads), score});
    out.push_back(std::move(kb));
  }
  return out;
}

KBestList random_instance(int length, std::size_t k, std::mt19937_64& rng) {
  static const std::vector<std::string> tags{"DT", "JJ", "NN", "VB", "IN"};
  std::uniform_int_distribution<std::size_t> tag(0, tags.size() - 1);
  std::vector<std::string> forms, pos;
  for (int i = 0; i < length; ++i) {
    pos.push_back(tags[tag(rng)]);
    forms.push_back(draw(pos.back(), rng));
  }
  const auto gold = random_heads(length, rng);
  KBestList kb;
  kb.gold = make_tree(forms, pos, gold);
  std::set<std::vector<int>> seen{gold};
  std::normal_distribution<double> score(0.0, 1.0);
  // A 2-token sentence has only two trees; stop when the space runs out.
  for (int attempts = 0; kb.candidates.size() < k && attempts < 1000; ++attempts) {
    auto heads = random_heads(length, rng);
    if (!seen.insert(heads).second) continue;
    kb.candidates.push_back({kb.gold.with_heads(heads), score(rng)});
  }
  return kb;
}

ParamSet random_params(const Hyperparams& hyper, const std::vector<KBestList>& lists,
                       std::uint64_t seed, double scale) {
  std::vector<DependencyTree> golds;
  for (const auto& kb : lists) golds.push_back(kb.gold);
  ParamSet p = init_random(hyper, build_vocabulary(golds, 1), collect_pos_tags(golds), seed);
  for (const auto& kb : lists) {
    p.touch_pairs(kb.gold);
    for (const auto& c : kb.candidates) p.touch_pairs(c.tree);
  }
  p.words *= scale;
  p.distances *= scale;
  p.fallback.W *= scale;
  p.fallback.v *= scale;
  for (auto& [key, pair] : p.pairs) {
    pair.W *= scale;
    pair.v *= scale;
  }
  return p;
}

}  // namespace rcnnrank::testing
