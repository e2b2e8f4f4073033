#pragma once

#include <stdexcept>
#include <string>

namespace ggrnet {

/// Shape disagreement between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// NaN or Inf reached a value or gradient buffer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. `line()` is 1-based, 0 when not applicable.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what, std::size_t line = 0, const std::string& context = {})
      : std::runtime_error(decorate(what, line, context)), detail_(what), line_(line) {}

  std::size_t line() const noexcept { return line_; }
  /// Message without file/line decoration.
  const std::string& detail() const noexcept { return detail_; }

 protected:
  static std::string decorate(const std::string& what, std::size_t line, const std::string& context) {
    std::string out = context.empty() ? std::string{} : context + ": ";
    if (line != 0) out += "line " + std::to_string(line) + ": ";
    return out + what;
  }

 private:
  std::string detail_;
  std::size_t line_;
};

/// Element symbol outside the configured vocabulary.
class VocabularyError : public std::runtime_error {
 public:
  explicit VocabularyError(const std::string& symbol, std::size_t line = 0, const std::string& context = {})
      : std::runtime_error((context.empty() ? std::string{} : context + ": ") +
                           (line == 0 ? std::string{} : "line " + std::to_string(line) + ": ") +
                           "unknown element symbol \"" + symbol + "\""),
        symbol_(symbol),
        line_(line) {}

  const std::string& symbol() const noexcept { return symbol_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string symbol_;
  std::size_t line_;
};

/// Dataset-level problems: missing files, empty partitions, constant targets.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration values, unreadable or incompatible checkpoints.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ggrnet
