#pragma once

#include <stdexcept>
#include <string>

namespace lexemb {

/// Raised for every contract violation reported by the library: malformed
/// input, violated preconditions, numerical failures.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input-file error that carries the offending 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::string source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what),
          source_(std::move(source)), line_(line) {}

    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string source_;
    std::size_t line_;
};

}  // namespace lexemb
