#include "rcnnrank/config.hpp"

#include <cmath>
#include <istream>
#include <sstream>

#include "rcnnrank/errors.hpp"
#include "text_util.hpp"

namespace rcnnrank {

const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> keys{
      "m",     "m_d",        "rho",        "kappa",    "lambda",        "k",
      "alpha", "dist_clip",  "seed",       "max_epochs", "patience",    "punct_set",
      "alpha_step", "unk_min_count", "adagrad_epsilon", "multi_root"};
  return keys;
}

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw ConfigError("setting '" + std::string(key) + "': '" + std::string(value) + "' is not " +
                    expected);
}

template <typename Int>
Int as_int(std::string_view key, std::string_view value) {
  const auto v = detail::parse_int<Int>(value);
  if (!v) bad_value(key, value, "an integer");
  return *v;
}

double as_real(std::string_view key, std::string_view value) {
  const auto v = detail::parse_double(value);
  if (!v || !std::isfinite(*v)) bad_value(key, value, "a finite number");
  return *v;
}

bool as_bool(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  bad_value(key, value, "a boolean");
}

}  // namespace

void apply_setting(Settings& s, std::string_view key, std::string_view value) {
  key = detail::trim(key);
  value = detail::trim(value);
  Hyperparams& h = s.train.hyper;
  if (key == "m") h.word_dim = as_int<int>(key, value);
  else if (key == "m_d") h.distance_dim = as_int<int>(key, value);
  else if (key == "rho") h.learning_rate = as_real(key, value);
  else if (key == "kappa") h.margin_discount = as_real(key, value);
  else if (key == "lambda") h.l2 = as_real(key, value);
  else if (key == "k") h.kbest = as_int<int>(key, value);
  else if (key == "alpha") h.alpha = as_real(key, value);
  else if (key == "dist_clip") h.distance_clip = as_int<int>(key, value);
  else if (key == "seed") s.train.seed = as_int<std::uint64_t>(key, value);
  else if (key == "max_epochs") s.train.max_epochs = as_int<int>(key, value);
  else if (key == "patience") s.train.patience = as_int<int>(key, value);
  else if (key == "punct_set") {
    s.punct_set = std::string(value);
    s.train.punct = punct_preset(value);
  } else if (key == "alpha_step") s.alpha_step = as_real(key, value);
  else if (key == "unk_min_count") s.unk_min_count = as_int<std::size_t>(key, value);
  else if (key == "adagrad_epsilon") s.train.adagrad_epsilon = as_real(key, value);
  else if (key == "multi_root")
    s.root_policy = as_bool(key, value) ? RootPolicy::kAllowMultiple : RootPolicy::kSingle;
  else {
    std::string valid;
    for (const auto& k : setting_keys()) valid += (valid.empty() ? "" : ", ") + k;
    throw ConfigError("unknown setting '" + std::string(key) + "'; valid keys: " + valid);
  }
}

void read_settings(std::istream& in, Settings& settings) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = detail::trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    try {
      apply_setting(settings, text.substr(0, eq), text.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string describe(const Settings& s) {
  const Hyperparams& h = s.train.hyper;
  std::ostringstream out;
  out << "m=" << h.word_dim << "\nm_d=" << h.distance_dim
      << "\nrho=" << detail::format_double(h.learning_rate)
      << "\nkappa=" << detail::format_double(h.margin_discount)
      << "\nlambda=" << detail::format_double(h.l2) << "\nk=" << h.kbest
      << "\nalpha=" << detail::format_double(h.alpha) << "\ndist_clip=" << h.distance_clip
      << "\nseed=" << s.train.seed << "\nmax_epochs=" << s.train.max_epochs
      << "\npatience=" << s.train.patience << "\npunct_set=" << s.punct_set
      << "\nalpha_step=" << detail::format_double(s.alpha_step)
      << "\nunk_min_count=" << s.unk_min_count
      << "\nadagrad_epsilon=" << detail::format_double(s.train.adagrad_epsilon)
      << "\nmulti_root=" << (s.root_policy == RootPolicy::kAllowMultiple ? 1 : 0) << '\n';
  return out.str();
}

}  // namespace rcnnrank
