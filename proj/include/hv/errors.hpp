#pragma once

#include <stdexcept>
#include <string>

namespace hv {

// Failure categories; the CLI maps them onto exit codes
// (config 2, budget 3, verification 4, numeric 5).
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : error {
  using error::error;
};

// normalize() rejects these three at the boundary.
struct singular_matrix : config_error {
  using config_error::config_error;
};
struct bad_denominator : config_error {
  using config_error::config_error;
};
struct not_in_group : config_error {
  using config_error::config_error;
};

// The projective class has no positive-determinant representative, so the
// weight-n action on H is undefined for it.
struct negative_determinant : config_error {
  using config_error::config_error;
};

struct nonhyperbolic : config_error {
  using config_error::config_error;
};
struct nontrivial_stabilizer : config_error {
  using config_error::config_error;
};

struct budget_exceeded : error {
  using error::error;
};

struct verification_failure : error {
  using error::error;
};

struct numeric_error : error {
  using error::error;
};
struct non_convergence : numeric_error {
  using numeric_error::numeric_error;
};
struct quadrature_failure : numeric_error {
  using numeric_error::numeric_error;
};
struct ill_conditioned : numeric_error {
  using numeric_error::numeric_error;
};

}  // namespace hv
