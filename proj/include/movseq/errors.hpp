#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace movseq {

// Invalid input data or configuration. The CLI maps this to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file; carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line, const std::string& source = {})
        : Error((source.empty() ? "" : source + ":") + "line " + std::to_string(line) + ": " + message),
          message_(message), line_(line) {}

    std::size_t line() const { return line_; }
    const std::string& message() const { return message_; }

private:
    std::string message_;
    std::size_t line_;
};

// A bounded search gave up before finishing. The CLI maps this to exit code 3.
class SearchLimitExceeded : public std::runtime_error {
public:
    SearchLimitExceeded(const std::string& stage, std::size_t limit)
        : std::runtime_error(stage + ": exceeded the limit of " + std::to_string(limit) +
                             " explored search states"),
          limit_(limit) {}

    std::size_t limit() const { return limit_; }

private:
    std::size_t limit_;
};

} // namespace movseq
