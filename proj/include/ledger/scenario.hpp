#pragma once

#include <string>

#include "ledger/simlab.hpp"

namespace ledger::simlab {

/// Parses scenario text. Malformed or invalid content raises ParseError
/// naming `source` and the line of the offending entry.
SimScenario parse_scenario(const std::string& text, const std::string& source = "<scenario>");

/// Reads a scenario file. The name "appendix_a" resolves to the built-in
/// default when no such file exists.
SimScenario load_scenario(const std::string& path);

const std::string& default_scenario_text();
SimScenario default_scenario();

}  // namespace ledger::simlab
