#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fluidic {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the netlist and stimulus readers. Line and column are 1-based;
/// column 0 means the whole line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message)
      : Error(format(line, column, message)), line_(line), column_(column), detail_(message) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  static std::string format(std::size_t line, std::size_t column, const std::string& message) {
    std::string out = "line " + std::to_string(line);
    if (column > 0) {
      out += ", column " + std::to_string(column);
    }
    return out + ": " + message;
  }

  std::size_t line_;
  std::size_t column_;
  std::string detail_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class InterfaceMismatch : public Error {
 public:
  using Error::Error;
};

class NotCombinational : public Error {
 public:
  using Error::Error;
};

class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace fluidic
