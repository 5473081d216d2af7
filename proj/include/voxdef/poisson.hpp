#pragma once

#include "voxdef/field.hpp"

namespace voxdef {

enum class PoissonMethod {
    spectral, // cosine-transform direct solve (default)
    sor       // plain successive over-relaxation fallback
};

struct PoissonOptions {
    PoissonMethod method = PoissonMethod::spectral;
    double tol = 1e-8;     // residual max-norm relative to max-norm of rhs
    int max_iters = 50000; // SOR sweep cap
    double omega = 1.9;    // SOR relaxation factor
};

// Solves laplacian(w) = rhs - mean(rhs) on the node box with homogeneous
// Neumann walls (mirror ghosts), where mean is the trapezoid domain average
// subtracted internally so the Neumann problem is compatible. The returned
// w is gauge-fixed to zero domain average. Throws ConvergenceError if the
// SOR fallback hits its sweep cap.
ScalarField solve_poisson_neumann(const ScalarField& rhs, const PoissonOptions& opts = {});

// The compact 5/7-point Laplacian with mirror ghost nodes that the solver
// inverts; exposed so callers can replay residuals.
ScalarField neumann_laplacian(const ScalarField& w);

} // namespace voxdef
