#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ensrom {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidGeometry : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SingularMatrix : public Error {
 public:
  SingularMatrix(long pivot, const std::string& what)
      : Error("singular matrix (pivot " + std::to_string(pivot) + "): " + what), pivot_(pivot) {}
  /// Column at which factorization broke down, or -1 when unknown.
  long pivot() const { return pivot_; }

 private:
  long pivot_;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class Asymmetric : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public Error {
 public:
  RankDeficient(std::size_t effective_rank, const std::string& what)
      : Error(what + " (effective rank " + std::to_string(effective_rank) + ")"),
        effective_rank_(effective_rank) {}
  std::size_t effective_rank() const { return effective_rank_; }

 private:
  std::size_t effective_rank_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InvariantViolation : public Error {
 public:
  InvariantViolation(std::size_t sample, const std::string& what)
      : Error("sample " + std::to_string(sample) + ": " + what), sample_(sample) {}
  std::size_t sample() const { return sample_; }

 private:
  std::size_t sample_;
};

class DegenerateEpsilon : public Error {
 public:
  using Error::Error;
};

/// Wraps an error raised inside one pipeline phase ("mesh", "fom", "pod", "rom").
class PhaseError : public Error {
 public:
  PhaseError(std::string phase, const std::string& what)
      : Error("[" + phase + "] " + what), phase_(std::move(phase)) {}
  const std::string& phase() const { return phase_; }

 private:
  std::string phase_;
};

}  // namespace ensrom
