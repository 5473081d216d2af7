#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "voxdef/field.hpp"

namespace voxdef {

// Least-squares reconstruction of a transformation from its prescribed
// Jacobian determinant (cell-centered) and displacement curl (node-centered,
// scalar in 2-D, 3-vector in 3-D), with an optional biharmonic smoothness
// term on the displacement.
struct RecoveryProblem {
    ScalarField target_jd;
    std::variant<ScalarField, VectorField> target_curl;
    double smooth_weight = 1e-3;
    int max_iters = 2000;
    double step_size = 0.1;
    double tol = 1e-8; // relative loss decrease that counts as converged
};

struct RecoveryResult {
    DiffeoMap map;
    std::vector<double> loss_history;      // accepted losses, non-increasing
    std::vector<double> grad_norm_history; // aligned with loss_history
    bool converged = false;
    std::vector<std::string> warnings;
};

// Identity plus a band-limited smooth displacement (low-order sine modes
// with seeded coefficients), zero normal displacement at the walls, scaled
// so the largest per-axis displacement is amplitude * extent. Throws
// ParamError if the requested amplitude folds the map.
DiffeoMap synthesize_t0(const LatticeGeometry& g, double amplitude, std::uint32_t seed);

// Gradient descent with backtracking line search from the identity map.
// Boundary nodes keep zero normal displacement throughout.
RecoveryResult recover(const RecoveryProblem& problem);

// L(phi): 0.5*||J(phi)-jd||^2 over cells + 0.5*||curl(phi-id)-cv||^2 over
// nodes + (lambda/2)*||laplacian(phi-id)||^2 over nodes, all volume-weighted
// discrete L2 norms.
double recovery_loss(const RecoveryProblem& problem, const DiffeoMap& phi);

// Analytic gradient with slippery-wall components masked to zero; returns
// the loss. Exposed so tests can check it against finite differences.
double recovery_loss_and_gradient(const RecoveryProblem& problem, const DiffeoMap& phi,
                                  VectorField& grad);

// 1 where a node component is free, 0 where the wall constraint pins it.
VectorField recovery_dof_mask(const LatticeGeometry& g);

} // namespace voxdef
