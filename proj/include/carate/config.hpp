#pragma once

#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "carate/harness.hpp"

namespace carate {

/// Parses an INI-style study description:
///
///     [population]   dgp = dgp1, dgp2
///     [strata]       builtin = 5 | breakpoints = -1, 0, 1
///                    proportions = constant | varying
///                    constant_pi = 0.4 | pi = 0.3, 0.7
///     [assignment]   mechanism = spbr | ssra
///     [crossfit]     folds, bandwidth_const, bandwidth_size, kernel_radius, kernel_norm
///     [estimators]   propensity = true_pi | sample_proportions
///     [harness]      n = 500, 1000 ; reps ; seed ; jobs ; bound_draws
///
/// '#' and ';' start comments. Unknown sections or keys are errors. Errors are
/// ConfigError with "<source>:<line>: " prefixes. The dgp key is not required
/// here; SimConfig::validate() enforces it where a run needs it.
SimConfig parse_config(std::istream& in, const std::string& source = "config");
SimConfig load_config(const std::string& path);

/// Effective settings as (section.key, value) pairs, in a fixed order.
std::vector<std::pair<std::string, std::string>> describe_config(const SimConfig& config);

}  // namespace carate
