#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tca {

// Non-finite input or a violated precondition.
struct invalid_argument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Vector/matrix dimensions do not agree.
struct shape_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Training produced a non-finite value.
struct training_failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct bad_magic_error : io_error {
  using io_error::io_error;
};

struct truncated_file_error : io_error {
  truncated_file_error(const std::string& path, std::size_t offset)
      : io_error(path + ": truncated at byte offset " + std::to_string(offset)),
        offset(offset) {}
  std::size_t offset;
};

struct count_mismatch_error : io_error {
  using io_error::io_error;
};

// Model file header is missing or carries an unsupported version.
struct version_error : io_error {
  using io_error::io_error;
};

// Model file is of a different kind or its body does not match the schema.
struct schema_error : io_error {
  using io_error::io_error;
};

namespace detail {

inline void require_shape(bool ok, const char* what) {
  if (!ok) throw shape_error(what);
}

inline void require_finite(double v, const char* what) {
  if (!(v - v == 0.0)) throw invalid_argument(std::string(what) + ": non-finite value");
}

}  // namespace detail
}  // namespace tca
