#pragma once

#include <stdexcept>
#include <string>

namespace hanslens {

// Distinct error families; the CLI maps each onto its own exit code.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Tensor/layer/model shapes that do not chain.
class ShapeError : public Error {
public:
  using Error::Error;
};

// Malformed or missing files, invariant violations in loaded data.
class DataError : public Error {
public:
  using Error::Error;
};

// Non-finite values, divergence, degenerate statistics.
class NumericalError : public Error {
public:
  using Error::Error;
};

// Invalid argument values (grids, configs, pre-conditions).
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace hanslens
