#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tro {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, std::size_t column)
      : Error(what + " at column " + std::to_string(column)), column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

class ArityError : public Error {
 public:
  using Error::Error;
};

class UnboundVariable : public Error {
 public:
  explicit UnboundVariable(std::string slot)
      : Error("unbound variable ?" + slot), slot_(std::move(slot)) {}
  const std::string& slot() const noexcept { return slot_; }

 private:
  std::string slot_;
};

class ContradictoryConjunction : public Error {
 public:
  using Error::Error;
};

class InvalidValue : public Error {
 public:
  using Error::Error;
};

class InvalidBehavior : public Error {
 public:
  using Error::Error;
};

class DuplicateName : public Error {
 public:
  using Error::Error;
};

class CycleDetected : public Error {
 public:
  explicit CycleDetected(std::vector<std::string> cycle)
      : Error("behavior composition cycle: " + join(cycle)), cycle_(std::move(cycle)) {}
  const std::vector<std::string>& cycle() const noexcept { return cycle_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += " -> ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> cycle_;
};

class UnknownChild : public Error {
 public:
  using Error::Error;
};

class UnknownBehavior : public Error {
 public:
  using Error::Error;
};

class UnknownGoal : public Error {
 public:
  using Error::Error;
};

class MalformedGoal : public Error {
 public:
  using Error::Error;
};

class Unsolvable : public Error {
 public:
  Unsolvable(const std::string& what, std::vector<std::string> literals)
      : Error(what), literals_(std::move(literals)) {}
  // Goal literals that could not be reached.
  const std::vector<std::string>& literals() const noexcept { return literals_; }

 private:
  std::vector<std::string> literals_;
};

class GroundingExplosion : public Error {
 public:
  using Error::Error;
};

class DepthExceeded : public Error {
 public:
  using Error::Error;
};

class DegenerateZone : public Error {
 public:
  using Error::Error;
};

class SpacingTooLarge : public Error {
 public:
  using Error::Error;
};

class UnboundZone : public Error {
 public:
  using Error::Error;
};

class InvalidCommand : public Error {
 public:
  using Error::Error;
};

class OutOfExtent : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

class CrcMismatch : public DecodeError {
 public:
  using DecodeError::DecodeError;
};

class PayloadTooLarge : public Error {
 public:
  using Error::Error;
};

class LinkTimeout : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class UnboundSymbol : public Error {
 public:
  explicit UnboundSymbol(std::vector<std::string> symbols)
      : Error("unbound symbols: " + join(symbols)), symbols_(std::move(symbols)) {}
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += ", ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> symbols_;
};

class CorruptLog : public Error {
 public:
  CorruptLog(std::size_t line, const std::string& what)
      : Error("corrupt log at line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class BindFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace tro
