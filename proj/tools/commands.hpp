#pragma once

#include <ostream>

#include "settings.hpp"

namespace simlr::cli {

int cmd_fit(const FitSettings& settings, std::ostream& out);
int cmd_simulate(const SimulateSettings& settings, std::ostream& out);
// `fit` holds the settings recorded in the fitted directory's manifest.
int cmd_permtest(const PermtestSettings& settings, const FitSettings& fit, std::ostream& out);

}  // namespace simlr::cli
