#pragma once

#include <functional>

#include "vpfpnn/autodiff.hpp"
#include "vpfpnn/diagnostics.hpp"
#include "vpfpnn/network.hpp"
#include "vpfpnn/numerics.hpp"
#include "vpfpnn/sampling.hpp"

namespace vpfpnn {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779;

// Normalized Maxwellian (2*pi)^{-1/2} exp(-v^2/2).
inline double maxwellian(double v) { return kInvSqrt2Pi * std::exp(-0.5 * v * v); }

// Rescaled kinetic problem on [0,T] x [-1,1] x [-10,10] with constant
// background charge h fixed by global neutrality.
struct VpfpProblem {
  double epsilon = 1.0;
  double t_horizon = 5.0;
  double x_min = -1.0, x_max = 1.0;
  double v_min = -10.0, v_max = 10.0;
  std::function<double(double, double)> f0;   // f0(x,v)
  std::function<double(double)> rho0;         // integral of f0 over v
  double h = 0.0;                             // background charge (constant)
  double f0_mass = 0.0;                       // quadrature of f0 over Omega x V

  double omega_len() const { return x_max - x_min; }

  // The configuration used throughout: f0 = e^{x-1}(1 - cos(pi v/2)) on
  // |v|<4, zero outside; h set from the quadrature mass.
  static VpfpProblem standard(double epsilon, double t_horizon);
  // Any f0; mass by nested trapezoid on fine uniform grids, h from neutrality.
  static VpfpProblem from_initial_condition(double epsilon, double t_horizon,
                                            std::function<double(double, double)> f0,
                                            std::function<double(double)> rho0 = nullptr);
  void validate() const;  // neutrality to 1e-8, epsilon > 0
};

// Steady state f = C_vpfp * M(v), E = 0 and its macroscopic scalars.
struct VpfpEquilibrium {
  double c_vpfp = 0.0;
  double ke_inf = 0.0;
  double ent_inf = 0.0;
  double ee_inf = 0.0;
  double fe_inf = 0.0;
};

VpfpEquilibrium equilibrium_targets(const VpfpProblem& problem);

// Kinetic residual eps^2 f_t + eps v f_x + eps E f_v - (f + v f_v + f_vv).
double residual_ge1(const ValueAndInputDerivs& f, double e_value, double v, double epsilon);

// Poisson residual E_x - rho + h.
double residual_poisson(double e_dx, double rho_from_f, double h_at_x);

using KineticBundleFn = std::function<ValueAndInputDerivs(double t, double x, double v)>;
using FieldBundleFn = std::function<ValueAndInputDerivs(double t, double x)>;

struct VpfpLossOptions {
  bool scale_ge1_by_eps2 = false;  // divide the GE1 residual by eps^2
  int chunk_blocks = 8;            // (t,x) blocks per tape chunk
};

// Loss evaluated from derivative bundles (analytic closures or pointwise
// autodiff); the reference path for tests and diagnostics.
LossBreakdown vpfp_loss_from_bundles(const KineticBundleFn& f_bundle, const FieldBundleFn& e_bundle,
                                     const CollocationBatch& batch, const VpfpProblem& problem,
                                     LossMode mode, const VpfpLossOptions& options = {});

// Wraps the networks as bundles (exact derivatives via jets).
LossBreakdown loss_vpfp(const FieldNetPair& nets, const CollocationBatch& batch,
                        const VpfpProblem& problem, LossMode mode,
                        const VpfpLossOptions& options = {});

// Training path: tape-based loss plus exact parameter gradients for both nets,
// and the per-(t,x)-block mean squared GE1 residual used by Grid Reuse.
struct VpfpLossGrad {
  LossBreakdown loss;
  ParamGradient f_grad;
  ParamGradient e_grad;
  std::vector<double> block_ge1;  // one per interior_tx block
};
VpfpLossGrad vpfp_loss_and_grad(const MlpParams& f_net, const MlpParams& e_net,
                                const CollocationBatch& batch, const VpfpProblem& problem,
                                LossMode mode, const VpfpLossOptions& options = {});

// IC2 target E(0,x): cumulative trapezoid of (rho0 - h) from x_min, computed
// on a fine uniform grid and linearly interpolated to the requested points.
std::vector<double> initial_e_target(const VpfpProblem& problem, std::span<const double> xs);

// Macroscopic time series on fixed evaluation grids from derivative-free
// closures (used for both nets and synthetic fields).
DiagnosticsRecord diagnostics_vpfp_fields(const std::function<double(double, double, double)>& f,
                                          const std::function<double(double, double)>& e,
                                          const std::vector<double>& times, const Grid1D& x_grid,
                                          const Grid1D& v_grid, const VpfpProblem& problem);
DiagnosticsRecord diagnostics_vpfp(const FieldNetPair& nets, const std::vector<double>& times,
                                   const Grid1D& x_grid, const Grid1D& v_grid,
                                   const VpfpProblem& problem);

}  // namespace vpfpnn
