// Exception taxonomy shared by every errlab module.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace errlab {

// Base class so callers can catch anything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NotPositiveSemiDefinite : public Error {
 public:
  using Error::Error;
};

class NonFiniteIntegrand : public Error {
 public:
  using Error::Error;
};

class NonPositiveTruth : public Error {
 public:
  using Error::Error;
};

class UnknownScenario : public Error {
 public:
  using Error::Error;
};

class MissingNotImputed : public Error {
 public:
  using Error::Error;
};

class Degenerate : public Error {
 public:
  using Error::Error;
};

class StratumTooSmall : public Error {
 public:
  using Error::Error;
};

// Carries the offending design columns; index 0 is the intercept, j >= 1 is
// design column j-1.
class RankDeficient : public Error {
 public:
  RankDeficient(const std::string& what, std::vector<std::size_t> cols)
      : Error(what), columns(std::move(cols)) {}
  std::vector<std::size_t> columns;
};

class WidthMismatch : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class NonFiniteActivation : public Error {
 public:
  using Error::Error;
};

class Diverged : public Error {
 public:
  using Error::Error;
};

class SchemaMismatch : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class TooManyLevels : public Error {
 public:
  using Error::Error;
};

class MalformedResults : public Error {
 public:
  using Error::Error;
};

class IndivisibleBudget : public Error {
 public:
  using Error::Error;
};

}  // namespace errlab
