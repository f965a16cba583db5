#pragma once

#include <stdexcept>
#include <string>

namespace qultsf {

/// Malformed argument to a numerical routine (bad shape, index, value).
class InvalidInput : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Dataset ingestion failure. The message names the offending row.
class IngestError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration. The message names the field.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Non-finite loss during training.
class TrainingDiverged : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string &msg) {
    if (!cond) {
        throw InvalidInput(msg);
    }
}

} // namespace detail
} // namespace qultsf
