#pragma once

#include <string>
#include <string_view>

#include "lqueue/levy_model.hpp"

namespace lq {

// Model config files are line-oriented `key = value` text; `#` starts a
// comment. Recognised keys:
//
//   drift = -1.0
//   gauss_var = 1.0
//   up.rate = 0.5
//   up.phases = [(0.3, 1.0), (0.7, 4.0)]     # (weight, decay) pairs
//   down.rate = 0
//   down.phases = []
//
// `drift` is required; everything else defaults to zero / empty. Unknown or
// repeated keys are parse errors reported with their line number.
LevyModel parse_model(std::string_view text);
LevyModel load_model(const std::string& path);

std::string format_model(const LevyModel& model);

}  // namespace lq
