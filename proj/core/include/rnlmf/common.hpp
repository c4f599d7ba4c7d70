#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rnlmf {

/// Dense real matrix; columns are samples throughout the library.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;
using Seed = std::uint64_t;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A parameter outside its documented domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Factorization failures, non-finite values, divergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
  }
}

/// Worker count for internal data parallelism. Honors RNLMF_THREADS; defaults to
/// the hardware concurrency.
std::size_t thread_count();

/// Runs body(i) for i in [0, n) across up to thread_count() threads. Each index is
/// visited exactly once; body must not write shared state outside its own slot.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t min_per_thread = 1);

}  // namespace rnlmf
