#pragma once

#include <stdexcept>
#include <string>

namespace birc {

// Invalid parameters at construction time (law, config, params).
class ConstructionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Site index outside the environment window.
class BoundaryError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Requested allocation exceeds the configured memory budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical routine failed to converge or hit a degenerate case.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The walk (or the branching recursion) reached the left edge of the window.
// The caller enlarges the reserve and retries with a fresh walk seed.
class LeftEdgeHit : public std::runtime_error {
 public:
  explicit LeftEdgeHit(long long edge)
      : std::runtime_error("walk reached left window edge " + std::to_string(edge)),
        edge_(edge) {}
  long long edge() const { return edge_; }

 private:
  long long edge_;
};

class UnsupportedError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace birc
