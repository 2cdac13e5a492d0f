#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace klnmf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller misuse: bad flags, mismatched modes, invalid configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed or invalid input data (files, matrices, invariants).
class DataError : public Error {
 public:
  using Error::Error;
};

/// The numerics could not proceed (dead topic, infinite divergence, ascent
/// where descent is guaranteed).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DeadTopicError : public NumericalError {
 public:
  explicit DeadTopicError(Eigen::Index topic)
      : NumericalError("dead topic " + std::to_string(topic)), topic_(topic) {}
  Eigen::Index topic() const noexcept { return topic_; }

 private:
  Eigen::Index topic_;
};

/// x_vd > 0 where the reconstruction (WH)_vd vanishes.
class InfiniteDivergenceError : public NumericalError {
 public:
  InfiniteDivergenceError(Eigen::Index term, Eigen::Index doc, const std::string& what)
      : NumericalError(what + " at (v=" + std::to_string(term) + ", d=" + std::to_string(doc) + ")"),
        term_(term),
        doc_(doc) {}
  Eigen::Index term() const noexcept { return term_; }
  Eigen::Index doc() const noexcept { return doc_; }

 private:
  Eigen::Index term_;
  Eigen::Index doc_;
};

class NoProgressError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace klnmf
