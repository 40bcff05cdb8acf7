#pragma once

#include <stdexcept>
#include <string>

namespace lcs {

// Error taxonomy shared by every module. The CLI maps these onto its
// exit-code contract: 0 success, 2 config, 3 data, 4 numeric abort.
struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParameterError : std::runtime_error {
  explicit ParameterError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TaxonomyError : std::runtime_error {
  explicit TaxonomyError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed files: carries the byte offset where parsing failed when known.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg, long offset = -1)
      : std::runtime_error(offset >= 0 ? msg + " (offset " + std::to_string(offset) + ")" : msg),
        byte_offset(offset) {}
  long byte_offset;
};

struct LookupError : std::runtime_error {
  explicit LookupError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite loss during training; carries the diagnostic the spec asks for.
struct NumericAbort : std::runtime_error {
  NumericAbort(const std::string& msg, int epoch_, int batch_, double lr_)
      : std::runtime_error(msg + " (epoch " + std::to_string(epoch_) + ", batch " +
                           std::to_string(batch_) + ", lr " + std::to_string(lr_) + ")"),
        epoch(epoch_), batch(batch_), lr(lr_) {}
  int epoch;
  int batch;
  double lr;
};

}  // namespace lcs
