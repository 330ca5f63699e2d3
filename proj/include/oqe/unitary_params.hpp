#pragma once

#include <vector>

#include "oqe/linalg.hpp"

namespace oqe {

/// Parameter set for a dim x dim unitary as a product of two-level rotations
/// followed by a diagonal phase layer:
///
///   U = G(p_1, q_1, theta_1, phi_1) * ... * G(p_L, q_L, theta_L, phi_L) * diag(e^{i lambda})
///
/// with L = dim (dim - 1) / 2 and the rotation on coordinates (p, q)
///
///   G = [ cos(theta)              -sin(theta) e^{-i phi} ]
///       [ sin(theta) e^{+i phi}    cos(theta)            ]
///
/// The plane order (p_l, q_l) is fixed by the decomposition sweep (columns
/// left to right, rows bottom up), so the parameter vector alone determines
/// the unitary. Total real parameter count: dim^2 including the global phase.
struct UnitaryParams {
    int dim = 0;
    std::vector<double> angles; // theta_l, length dim (dim - 1) / 2
    std::vector<double> phases; // phi_l followed by the dim diagonal lambdas

    int rotation_count() const { return dim * (dim - 1) / 2; }
    int parameter_count() const { return dim * dim; }

    static UnitaryParams zero(int dim);
};

/// Plane (p, q) acted on by rotation l, shared by the builder and the solver.
std::pair<int, int> rotation_plane(int dim, int l);

/// Build the unitary from parameters; the result is unitary for any values.
Matrix unitary_from_params(const UnitaryParams& p);

/// Invert unitary_from_params; round trips within 1e-10 for unitary input.
UnitaryParams params_from_unitary(const Matrix& u);

/// d(unitary)/d(parameter) for every parameter, same ordering as the flat
/// vector view (angles, then rotation phases, then diagonal lambdas).
std::vector<Matrix> unitary_jacobian(const UnitaryParams& p);

/// Flat real-vector view used by optimizers.
std::vector<double> flatten(const UnitaryParams& p);
UnitaryParams unflatten(int dim, const double* data);

} // namespace oqe
