#pragma once

#include <Eigen/Dense>

#include "levyest/sde.hpp"

namespace levyest {

/// Score and information functionals evaluated on one path at one grid time.
struct ScoreSample {
  Eigen::VectorXd xi1;  // d
  Eigen::MatrixXd xi2;  // d x d, symmetric
  double t = 0.0;
  Eigen::VectorXd theta;
};

// Degeneracy floor: paths whose |DX_t| falls at or below the floor carry no
// usable jump information and are rejected with degenerate_path_error.  The
// exact-zero case (no effective jumps) is always rejected; a small positive
// floor (layers pass a fraction of u_max) additionally suppresses the
// heavy-tailed 1/DX^k contributions near the degeneracy manifold.

/// Score functional: component a is
///   dX/dtheta_a * delta(1)/DX + dX/dtheta_a * D^2X/DX^2 - D(dX/dtheta_a)/DX.
Eigen::VectorXd xi1(const SensitivityPath& s, int k, double dx_floor = 0.0);

/// Information functional: the Skorokhod integral
///   delta( (1/DX) ( delta( dX/dtheta_a dX/dtheta_b / DX ) + d2X/dtheta2 ) )
/// expanded through the adjoint rule delta(W) = W delta(1) - DW.
Eigen::MatrixXd xi2(const SensitivityPath& s, int k, double dx_floor = 0.0);

ScoreSample score_sample(const SensitivityPath& s, int k, double dx_floor,
                         Eigen::VectorXd theta);

/// Same functionals from a single-interval simulation, written into
/// caller-owned storage (bridge loops).
void xi_from_interval(const IntervalResult& iv, double dx_floor,
                      Eigen::VectorXd& xi1_out, Eigen::MatrixXd& xi2_out);

}  // namespace levyest
