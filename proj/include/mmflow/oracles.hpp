#pragma once

// Independent references: ball evolutions, the barrier ODE, a finite
// difference level-set solver and set measurements.

#include "mmflow/atw.hpp"
#include "mmflow/core.hpp"

#include <functional>
#include <vector>

namespace mmflow {

/// Adaptive RK4 for the scalar ODE r' = rhs(t, r) on [0, t]: the step count
/// doubles until two successive results agree to `tol`. Returns 0 once r
/// reaches 0 (extinction).
double integrate_radius(const std::function<double(double, double)>& rhs, double r0, double t,
                        double tol = 1e-8);

/// Radius at time t of a ball moving by r' = G(-1/r + f(t)), isotropic
/// classical curvature in the plane. Closed forms for Identity and Power with
/// f = 0, RK4 otherwise; 0 after extinction.
double exact_ball_radius(const Nonlinearity& G, const Forcing& f, double r0, double t);

/// min{-1, G(-cbar(r) - |f|_inf) / c_psi}.
double kappa_hat(double r, const StepContext& ctx);

/// Inner barrier radius: r0 - a t for finite a, else the solution of
/// r' = kappa_hat(r), clipped at 0.
double barrier_radius(double r0, double t, const StepContext& ctx);

/// Smallest t with barrier_radius(r0, t) = 0, by bisection to 1e-6.
double extinction_time(double r0, const StepContext& ctx);

struct FDState {
  Grid grid;
  Field u;
  double epsilonReg = 0.0;
  double t = 0.0;
};

/// Explicit central-difference solver for
///   u_t = |grad u|_eps G(div(grad u / |grad u|_eps) + f(t)),
/// |p|_eps = sqrt(|p|^2 + eps^2), eps = dx. Values on the outer `margin`
/// cells are held fixed. Returns the state at each requested time.
std::vector<FDState> fd_reference_evolve(const Grid& g, const Field& u0, const Nonlinearity& G,
                                         const Forcing& f, const std::vector<double>& times,
                                         int margin = 2);

struct RadiusMeasure {
  double radius = 0.0;      // sqrt(area / pi)
  double anisometry = 1.0;  // max / min boundary-cell distance to the centroid
  Vec2 centroid = Vec2::Zero();
};

RadiusMeasure measure_radius(const CellSet& e);

/// Hausdorff distance between the inner boundaries of two sets (world units).
double boundary_hausdorff(const CellSet& a, const CellSet& b);

}  // namespace mmflow
