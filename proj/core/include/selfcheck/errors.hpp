#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace selfcheck {

// Base of every error thrown by the library. The category maps onto the
// command-line exit-code contract (1 config, 2 data, 3 transport).
class Error : public std::runtime_error {
 public:
  enum class Category { Config, Data, Transport };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(Category::Config, what) {}
};

// Invalid inputs to a domain operation (empty lists, zero vectors, ...).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(Category::Data, what) {}
};

// A metric whose value is mathematically undefined for the given inputs,
// e.g. average precision without positives or correlation of a constant.
class UndefinedMetricError : public DataError {
 public:
  UndefinedMetricError(std::string metric, const std::string& what)
      : DataError(metric + ": " + what), metric_(std::move(metric)) {}

  const std::string& metric() const noexcept { return metric_; }

 private:
  std::string metric_;
};

// File-format error. `position` is a byte offset for binary inputs and a
// 1-based line number for text inputs.
class ParseError : public DataError {
 public:
  enum class Kind {
    MalformedHeader,
    BadDimension,
    Truncated,
    DuplicateToken,
    RaggedRow,
    BadNumber,
    ZeroVector,
    MalformedRecord,
  };

  ParseError(Kind kind, std::uint64_t position, const std::string& what)
      : DataError(what), kind_(kind), position_(position) {}

  Kind kind() const noexcept { return kind_; }
  std::uint64_t position() const noexcept { return position_; }

 private:
  Kind kind_;
  std::uint64_t position_;
};

class TransportError : public Error {
 public:
  TransportError(int last_status, const std::string& what)
      : Error(Category::Transport, what), last_status_(last_status) {}

  // HTTP status of the final attempt, or 0 when no response was received.
  int last_status() const noexcept { return last_status_; }

 private:
  int last_status_;
};

// The endpoint answered, but not in the expected wire format.
class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error(Category::Transport, what) {}
};

}  // namespace selfcheck
