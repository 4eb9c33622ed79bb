#pragma once

#include <stdexcept>
#include <string>

namespace nscbf {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A barrier leaf or reciprocal transform was evaluated at a singular point
/// (zero distance, or h at or below the floor).
class SingularityError : public Error {
 public:
  SingularityError(int leaf_index, const std::string& what)
      : Error(what), leaf_index_(leaf_index) {}

  int leaf_index() const noexcept { return leaf_index_; }

 private:
  int leaf_index_;
};

}  // namespace nscbf
