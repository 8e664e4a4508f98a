#pragma once

#include <vector>

#include "vpfpnn/numerics.hpp"

namespace vpfpnn {

enum class LossMode { MSE, RMSE };

// The six loss components of one system plus their sum; in RMSE mode each
// component is the square root of its MSE value.
struct LossBreakdown {
  double ge1 = 0, ge2 = 0, ic1 = 0, ic2 = 0, bc1 = 0, bc2 = 0;
  double total = 0;
  LossMode mode = LossMode::MSE;

  double component_sum() const { return ge1 + ge2 + ic1 + ic2 + bc1 + bc2; }
};

// Time series of the macroscopic quantities. VPFP fills mass/ke/ent/ee/fe and
// the f-to-equilibrium norms; PNP fills mass_rho/fe_rho/l2_rho_to_eq. e_linf
// is shared.
struct DiagnosticsRecord {
  std::vector<double> times;

  std::vector<double> mass, ke, ent, ee, fe;
  std::vector<double> l1_to_eq, l2_to_eq, linf_to_eq;

  std::vector<double> mass_rho, fe_rho, l2_rho_to_eq;

  std::vector<double> e_linf;

  DecayFit fe_fit;          // PNP free-energy decay fit on the positive window
  int clamped_samples = 0;  // nonpositive densities hit inside x*log(x)
};

}  // namespace vpfpnn
