#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rcnnrank/trainer.hpp"

namespace rcnnrank {

/// Everything a run can be configured with. Read from a flat `key = value`
/// file (`#` starts a comment) and overridden by command-line flags.
struct Settings {
  TrainConfig train;
  std::string punct_set = "ptb";
  double alpha_step = 0.005;
  std::size_t unk_min_count = 2;
  RootPolicy root_policy = RootPolicy::kSingle;
};

/// Keys accepted by `apply_setting`, in documentation order.
const std::vector<std::string>& setting_keys();

/// Throws ConfigError naming the valid keys when `key` is unknown, or
/// describing the problem when `value` does not parse.
void apply_setting(Settings& settings, std::string_view key, std::string_view value);

void read_settings(std::istream& in, Settings& settings);

/// `key=value` lines for every setting, in `setting_keys` order.
std::string describe(const Settings& settings);

}  // namespace rcnnrank
