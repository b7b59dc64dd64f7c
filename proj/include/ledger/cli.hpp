#pragma once

// Command-line front end. `run` is the whole program minus process setup so
// it can be driven in-process by tests.

#include <iosfwd>
#include <string>
#include <vector>

#include "ledger/validation.hpp"

namespace ledger::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 2,
    kInput = 3,         // parse or file diagnostic
    kPrecondition = 4,  // e.g. no pipelines to score
    kRefused = 5,       // certification refused
};

inline constexpr const char* kVersion = "0.1.0";

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Flat "key: value" certificate record; numbers use four decimals.
std::string format_certificate(const validation::ValidationCertificate& cert);

/// Inverse of format_certificate. total_upper is recomputed from the bounds
/// and must agree with the stored value to the printed precision.
validation::ValidationCertificate parse_certificate(const std::string& text,
                                                    const std::string& source);

}  // namespace ledger::cli
