#pragma once

#include <functional>

#include "vpfpnn/autodiff.hpp"
#include "vpfpnn/diagnostics.hpp"
#include "vpfpnn/network.hpp"
#include "vpfpnn/numerics.hpp"
#include "vpfpnn/sampling.hpp"

namespace vpfpnn {

// Drift-diffusion-Poisson problem on [0,T] x [-1,1] with constant background
// charge fixed by neutrality.
struct PnpProblem {
  double t_horizon = 1.0;
  double x_min = -1.0, x_max = 1.0;
  std::function<double(double)> rho0;
  double h = 0.0;
  double rho0_mass = 0.0;

  double omega_len() const { return x_max - x_min; }

  static PnpProblem standard(double t_horizon);  // rho0 = 8 e^{x-1}
  static PnpProblem from_initial_condition(double t_horizon, std::function<double(double)> rho0);
  void validate() const;
};

struct PnpEquilibrium {
  double c_pnp = 0.0;
  double e_inf = 0.0;   // identically zero for constant h
  double fe_inf = 0.0;  // |Omega| * c * ln(c)
};

PnpEquilibrium pnp_equilibrium(const PnpProblem& problem);

// Drift-diffusion residual rho_t - rho_xx + rho_x E + rho E_x.
double residual_pnp_ge1(const ValueAndInputDerivs& d_rho, const ValueAndInputDerivs& d_e);

struct PnpLossOptions {
  int chunk = 4096;  // interior points per tape chunk
};

LossBreakdown pnp_loss_from_bundles(const FieldBundleFn& rho_bundle, const FieldBundleFn& e_bundle,
                                    const CollocationBatch& batch, const PnpProblem& problem,
                                    LossMode mode);

LossBreakdown loss_pnp(const FieldNetPair& nets, const CollocationBatch& batch,
                       const PnpProblem& problem, LossMode mode);

struct PnpLossGrad {
  LossBreakdown loss;
  ParamGradient rho_grad;
  ParamGradient e_grad;
  std::vector<double> point_ge1;  // squared GE1 residual per interior_tx point
};
PnpLossGrad pnp_loss_and_grad(const MlpParams& rho_net, const MlpParams& e_net,
                              const CollocationBatch& batch, const PnpProblem& problem,
                              LossMode mode, const PnpLossOptions& options = {});

std::vector<double> pnp_initial_e_target(const PnpProblem& problem, std::span<const double> xs);

DiagnosticsRecord diagnostics_pnp_fields(const std::function<double(double, double)>& rho,
                                         const std::function<double(double, double)>& e,
                                         const std::vector<double>& times, const Grid1D& x_grid,
                                         const PnpProblem& problem);
DiagnosticsRecord diagnostics_pnp(const FieldNetPair& nets, const std::vector<double>& times,
                                  const Grid1D& x_grid, const PnpProblem& problem);

}  // namespace vpfpnn
