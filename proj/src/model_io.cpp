// Binary model container. Layout (all integers little-endian, reals IEEE-754
// binary64 as stored in memory):
//
//   "RCNNRANK" u32 version
//   hyper: i32 m, i32 m_d, f64 rho, f64 kappa, f64 lambda, i32 k, f64 alpha, i32 clip
//   strings(vocab) strings(pos tags)
//   matrix(words) matrix(distances) matrix(fallback W) matrix(fallback v)
//   u64 #pairs, then per pair: string head, string child, matrix W, matrix v
//   string(rng state) "END!"
//
// string = u64 length + bytes; strings = u64 count + strings;
// matrix = u64 rows + u64 cols + column-major f64 data.

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "rcnnrank/errors.hpp"
#include "rcnnrank/params.hpp"

namespace rcnnrank {

static_assert(std::endian::native == std::endian::little,
              "model container is defined for little-endian hosts");

namespace {

constexpr char kMagic[8] = {'R', 'C', 'N', 'N', 'R', 'A', 'N', 'K'};
constexpr char kTrailer[4] = {'E', 'N', 'D', '!'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 32;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
  void pod(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void bytes(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
  void string(const std::string& s) {
    pod<std::uint64_t>(s.size());
    bytes(s.data(), s.size());
  }
  void strings(const std::vector<std::string>& v) {
    pod<std::uint64_t>(v.size());
    for (const auto& s : v) string(s);
  }
  void matrix(const Eigen::MatrixXd& m) {
    pod<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
    pod<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
    bytes(reinterpret_cast<const char*>(m.data()), sizeof(double) * static_cast<std::size_t>(m.size()));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
  T pod() {
    T v{};
    bytes(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  }
  void bytes(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw LoadError("model file is truncated");
  }
  std::uint64_t count() {
    const auto n = pod<std::uint64_t>();
    if (n > kMaxCount) throw LoadError("model file is corrupt (implausible length)");
    return n;
  }
  std::string string() {
    std::string s(count(), '\0');
    bytes(s.data(), s.size());
    return s;
  }
  std::vector<std::string> strings() {
    std::vector<std::string> v(count());
    for (auto& s : v) s = string();
    return v;
  }
  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols) {
    const auto r = count();
    const auto c = count();
    if (static_cast<Eigen::Index>(r) != rows || static_cast<Eigen::Index>(c) != cols)
      throw LoadError("matrix of shape " + std::to_string(r) + "x" + std::to_string(c) +
                      " where " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " was expected");
    Eigen::MatrixXd m(rows, cols);
    bytes(reinterpret_cast<char*>(m.data()), sizeof(double) * static_cast<std::size_t>(m.size()));
    return m;
  }

 private:
  std::istream& in_;
};

}  // namespace

void save_model(const ParamSet& p, std::ostream& out) {
  Writer w(out);
  w.bytes(kMagic, sizeof kMagic);
  w.pod<std::uint32_t>(kVersion);

  const Hyperparams& h = p.hyper;
  w.pod<std::int32_t>(h.word_dim);
  w.pod<std::int32_t>(h.distance_dim);
  w.pod<double>(h.learning_rate);
  w.pod<double>(h.margin_discount);
  w.pod<double>(h.l2);
  w.pod<std::int32_t>(h.kbest);
  w.pod<double>(h.alpha);
  w.pod<std::int32_t>(h.distance_clip);

  w.strings(p.vocab.symbols());
  w.strings(p.pos_tags);
  w.matrix(p.words);
  w.matrix(p.distances);
  w.matrix(p.fallback.W);
  w.matrix(p.fallback.v);
  w.pod<std::uint64_t>(p.pairs.size());
  for (const auto& [key, pair] : p.pairs) {
    w.string(key.first);
    w.string(key.second);
    w.matrix(pair.W);
    w.matrix(pair.v);
  }
  std::ostringstream rng;
  rng << p.rng;
  w.string(rng.str());
  w.bytes(kTrailer, sizeof kTrailer);
  if (!out) throw LoadError("failed to write model");
}

ParamSet load_model(std::istream& in) {
  Reader r(in);
  char magic[sizeof kMagic];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw LoadError("not a model file");
  const auto version = r.pod<std::uint32_t>();
  if (version != kVersion)
    throw LoadError("unsupported model version " + std::to_string(version) + " (expected " +
                    std::to_string(kVersion) + ")");

  ParamSet p;
  Hyperparams& h = p.hyper;
  h.word_dim = r.pod<std::int32_t>();
  h.distance_dim = r.pod<std::int32_t>();
  h.learning_rate = r.pod<double>();
  h.margin_discount = r.pod<double>();
  h.l2 = r.pod<double>();
  h.kbest = r.pod<std::int32_t>();
  h.alpha = r.pod<double>();
  h.distance_clip = r.pod<std::int32_t>();
  try {
    h.validate();
  } catch (const ConfigError& e) {
    throw LoadError(std::string("bad hyperparameters: ") + e.what());
  }

  const auto symbols = r.strings();
  if (symbols.size() < 2 || symbols[0] != kUnknownWord || symbols[1] != kRootWord)
    throw LoadError("vocabulary lacks the reserved UNK/ROOT rows");
  p.vocab = Vocabulary(symbols);
  if (p.vocab.symbols() != symbols) throw LoadError("vocabulary is not in canonical order");
  p.pos_tags = r.strings();

  const Eigen::Index m = h.word_dim;
  p.words = r.matrix(m, static_cast<Eigen::Index>(symbols.size()));
  p.distances = r.matrix(h.distance_dim, 2 * h.distance_clip + 1);
  p.fallback.W = r.matrix(m, h.input_dim());
  p.fallback.v = r.matrix(m, 1);
  const auto n_pairs = r.count();
  for (std::uint64_t i = 0; i < n_pairs; ++i) {
    PosPair key;
    key.first = r.string();
    key.second = r.string();
    PairParams pair;
    pair.W = r.matrix(m, h.input_dim());
    pair.v = r.matrix(m, 1);
    if (!p.pairs.emplace(std::move(key), std::move(pair)).second)
      throw LoadError("duplicate POS pair in model file");
  }
  std::istringstream rng(r.string());
  rng >> p.rng;
  if (!rng) throw LoadError("corrupt random-stream state");
  char trailer[sizeof kTrailer];
  r.bytes(trailer, sizeof trailer);
  if (std::memcmp(trailer, kTrailer, sizeof kTrailer) != 0) throw LoadError("missing end marker");
  return p;
}

}  // namespace rcnnrank
