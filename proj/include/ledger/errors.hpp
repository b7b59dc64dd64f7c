#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace ledger {

/// A numeric argument outside its admissible range. `field()` names the
/// offending input so diagnostics can point at it.
class DomainError : public std::domain_error {
public:
    DomainError(std::string field, const std::string& what)
        : std::domain_error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// A call whose precondition cannot be met by any value of its arguments,
/// e.g. the best score over an empty pipeline set.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UnsupportedComposition : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Raised when a pipeline component that is present has no evaluation data.
/// An unvalidated component is never assumed error-free.
class CertificationRefused : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A trainer failure inside cross-validation, tagged with the fold it hit.
class FoldError : public std::runtime_error {
public:
    FoldError(std::size_t fold, const std::string& what)
        : std::runtime_error("fold " + std::to_string(fold) + ": " + what), fold_(fold) {}

    std::size_t fold() const noexcept { return fold_; }

private:
    std::size_t fold_;
};

/// Malformed input file. Carries the file name and 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string file, std::size_t line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
          file_(std::move(file)),
          line_(line) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

}  // namespace ledger
