// Exception hierarchy shared by every fedlogit module.
#pragma once

#include <stdexcept>
#include <string>

namespace fedlogit {

// Base class for all library errors. Catching this catches everything fedlogit throws.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

// Invalid option values, impossible option combinations, unknown config keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A CSV header is missing required columns.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A cell or line could not be parsed (always carries the 1-based row number).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Structural invariant violations in datasets: duplicates, empty sites, bad labels.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Dimension mismatches between vectors, stats, weights, or datasets.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Synthetic cohort generation cannot satisfy the requested parameters.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// Graph construction or validation failure (self-loops, infeasible degree, ...).
class GraphError : public Error {
 public:
  using Error::Error;
};

// A site / node / key was requested that does not exist.
class LookupError : public Error {
 public:
  using Error::Error;
};

// A stratified fold plan cannot be built (a class has fewer samples than folds).
class StratificationError : public Error {
 public:
  using Error::Error;
};

// A metric is undefined for the given inputs (e.g. single-class AUC).
class MetricError : public Error {
 public:
  using Error::Error;
};

// Trainer preconditions violated (wrong graph architecture, single-class cohort, ...).
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Non-finite weights appeared during optimization; message names the iteration.
class DivergenceError : public TrainingError {
 public:
  using TrainingError::TrainingError;
};

// Filesystem failures: unreadable input, unwritable output directory.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedlogit
