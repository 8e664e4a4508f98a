#include "vpfpnn/pnp.hpp"

#include <algorithm>
#include <cmath>

#include "vpfpnn/errors.hpp"

namespace vpfpnn {

namespace {
constexpr int kQuadX = 2001;
}

PnpProblem PnpProblem::standard(double t_horizon) {
  return from_initial_condition(t_horizon, [](double x) { return 8.0 * std::exp(x - 1.0); });
}

PnpProblem PnpProblem::from_initial_condition(double t_horizon, std::function<double(double)> rho0) {
  PnpProblem p;
  p.t_horizon = t_horizon;
  p.rho0 = std::move(rho0);
  const Grid1D xg = Grid1D::uniform(p.x_min, p.x_max, kQuadX);
  std::vector<double> vals(xg.size());
  for (int i = 0; i < xg.size(); ++i) vals[i] = p.rho0(xg.nodes[i]);
  p.rho0_mass = trapezoid(vals, xg);
  p.h = p.rho0_mass / p.omega_len();
  p.validate();
  return p;
}

void PnpProblem::validate() const {
  if (!(t_horizon > 0)) throw ConfigError("PnpProblem: horizon must be positive");
  const double imbalance = rho0_mass - h * omega_len();
  if (std::abs(imbalance) > 1e-8)
    throw ConfigError("PnpProblem: neutrality violated by " + std::to_string(imbalance));
}

PnpEquilibrium pnp_equilibrium(const PnpProblem& problem) {
  PnpEquilibrium eq;
  eq.c_pnp = problem.rho0_mass / problem.omega_len();
  eq.e_inf = 0.0;
  eq.fe_inf = problem.omega_len() * eq.c_pnp * std::log(eq.c_pnp);
  return eq;
}

double residual_pnp_ge1(const ValueAndInputDerivs& d_rho, const ValueAndInputDerivs& d_e) {
  // product rule on d_x(rho E)
  return d_rho.d_t - d_rho.d_xx + d_rho.d_x * d_e.value + d_rho.value * d_e.d_x;
}

std::vector<double> pnp_initial_e_target(const PnpProblem& problem, std::span<const double> xs) {
  const Grid1D xg = Grid1D::uniform(problem.x_min, problem.x_max, kQuadX);
  std::vector<double> vals(xg.size());
  for (int i = 0; i < xg.size(); ++i) vals[i] = problem.rho0(xg.nodes[i]) - problem.h;
  const std::vector<double> cum = cumulative_trapezoid(vals, xg, 0.0);
  std::vector<double> out(xs.size());
  for (size_t q = 0; q < xs.size(); ++q) {
    const double x = std::clamp(xs[q], problem.x_min, problem.x_max);
    const auto it = std::upper_bound(xg.nodes.begin(), xg.nodes.end(), x);
    const int i = std::max<int>(0, static_cast<int>(it - xg.nodes.begin()) - 1);
    const double vx = problem.rho0(x) - problem.h;
    out[q] = cum[i] + 0.5 * (x - xg.nodes[i]) * (vals[i] + vx);
  }
  return out;
}

namespace {

struct ComponentSums {
  double sse[6] = {0, 0, 0, 0, 0, 0};
  long n[6] = {0, 0, 0, 0, 0, 0};
};

LossBreakdown finalize(const ComponentSums& s, LossMode mode) {
  LossBreakdown out;
  out.mode = mode;
  double comp[6];
  for (int c = 0; c < 6; ++c) {
    const double mse = s.n[c] > 0 ? s.sse[c] / static_cast<double>(s.n[c]) : 0.0;
    comp[c] = mode == LossMode::RMSE ? std::sqrt(mse) : mse;
  }
  out.ge1 = comp[0];
  out.ge2 = comp[1];
  out.ic1 = comp[2];
  out.ic2 = comp[3];
  out.bc1 = comp[4];
  out.bc2 = comp[5];
  out.total = out.component_sum();
  return out;
}

const char* kComponentNames[6] = {"ge1", "ge2", "ic1", "ic2", "bc1", "bc2"};

void component_factors(const ComponentSums& s, LossMode mode, double* factors) {
  for (int c = 0; c < 6; ++c) {
    if (s.n[c] == 0) {
      factors[c] = 0.0;
      continue;
    }
    const double n = static_cast<double>(s.n[c]);
    if (mode == LossMode::MSE) {
      factors[c] = 1.0 / n;
    } else {
      const double mse = s.sse[c] / n;
      factors[c] = mse > 0 ? 0.5 / (n * std::sqrt(mse)) : 0.0;
    }
  }
}

Eigen::MatrixXd axis_direction_rows(int dim, int axis, Eigen::Index cols) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(dim, cols);
  d.row(axis).setOnes();
  return d;
}

void locate_nonfinite(const Eigen::MatrixXd& row, const char* what) {
  for (Eigen::Index j = 0; j < row.cols(); ++j)
    if (!std::isfinite(row(0, j)))
      throw NumericError(std::string(what) + ": non-finite residual at sample " + std::to_string(j));
  throw NumericError(std::string(what) + ": non-finite loss");
}

}  // namespace

LossBreakdown pnp_loss_from_bundles(const FieldBundleFn& rho_bundle, const FieldBundleFn& e_bundle,
                                    const CollocationBatch& batch, const PnpProblem& problem,
                                    LossMode mode) {
  ComponentSums s;

  for (size_t i = 0; i < batch.interior_tx.size(); ++i) {
    const auto [t, x] = batch.interior_tx[i];
    const ValueAndInputDerivs r = rho_bundle(t, x);
    const ValueAndInputDerivs e = e_bundle(t, x);
    const double r1 = residual_pnp_ge1(r, e);
    if (!std::isfinite(r1))
      throw NumericError("pnp loss ge1: non-finite residual at sample " + std::to_string(i));
    s.sse[0] += r1 * r1;

    const double g = e.d_x - r.value + problem.h;
    const double gt = e.d_tx - r.d_t;
    const double gx = e.d_xx - r.d_x;
    s.sse[1] += g * g + gt * gt + gx * gx;
  }
  s.n[0] = static_cast<long>(batch.interior_tx.size());
  s.n[1] = static_cast<long>(batch.interior_tx.size());

  for (size_t i = 0; i < batch.initial_x.size(); ++i) {
    const double d = rho_bundle(0.0, batch.initial_x[i]).value - problem.rho0(batch.initial_x[i]);
    s.sse[2] += d * d;
  }
  s.n[2] = static_cast<long>(batch.initial_x.size());

  const std::vector<double> e0 = pnp_initial_e_target(problem, batch.initial_x);
  for (size_t i = 0; i < batch.initial_x.size(); ++i) {
    const double d = e_bundle(0.0, batch.initial_x[i]).value - e0[i];
    s.sse[3] += d * d;
  }
  s.n[3] = static_cast<long>(batch.initial_x.size());

  for (const auto& [t, side] : batch.boundary_ts) {
    const double x = side < 0 ? problem.x_min : problem.x_max;
    const double rx = rho_bundle(t, x).d_x;
    s.sse[4] += rx * rx;
    const ValueAndInputDerivs e = e_bundle(t, x);
    s.sse[5] += e.value * e.value + e.d_t * e.d_t;
  }
  s.n[4] = static_cast<long>(batch.boundary_ts.size());
  s.n[5] = static_cast<long>(batch.boundary_ts.size());

  for (int c = 0; c < 6; ++c)
    if (!std::isfinite(s.sse[c]))
      throw NumericError(std::string("pnp loss ") + kComponentNames[c] + ": non-finite value");
  return finalize(s, mode);
}

LossBreakdown loss_pnp(const FieldNetPair& nets, const CollocationBatch& batch,
                       const PnpProblem& problem, LossMode mode) {
  auto rho_bundle = [&](double t, double x) {
    const double in[2] = {t, x};
    return eval_with_input_derivs(nets.solution_net, in, DerivRequest::density());
  };
  auto e_bundle = [&](double t, double x) {
    const double in[2] = {t, x};
    DerivRequest req;
    req.d_t = true;
    req.d_x = true;
    req.d_xx = true;
    req.d_tx = true;
    return eval_with_input_derivs(nets.force_net, in, req);
  };
  return pnp_loss_from_bundles(rho_bundle, e_bundle, batch, problem, mode);
}

PnpLossGrad pnp_loss_and_grad(const MlpParams& rho_net, const MlpParams& e_net,
                              const CollocationBatch& batch, const PnpProblem& problem,
                              LossMode mode, const PnpLossOptions& options) {
  ComponentSums s;
  std::vector<ParamGradient> rg(6, ParamGradient::zeros_like(rho_net));
  std::vector<ParamGradient> eg(6, ParamGradient::zeros_like(e_net));
  PnpLossGrad out;
  const int np = static_cast<int>(batch.interior_tx.size());
  out.point_ge1.assign(np, 0.0);

  // Interior: GE1 and GE2 share both nets' passes on one tape, two roots.
  const int chunk = std::max(1, options.chunk);
  for (int c0 = 0; c0 < np; c0 += chunk) {
    const int c1 = std::min(np, c0 + chunk);
    const Eigen::Index m = c1 - c0;
    Eigen::MatrixXd P(2, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      P(0, i) = batch.interior_tx[c0 + i].first;
      P(1, i) = batch.interior_tx[c0 + i].second;
    }
    Tape tape;
    TapeNet tr = TapeNet::attach(tape, rho_net);
    TapeNet te = TapeNet::attach(tape, e_net);
    Tape::Var pin = tape.constant(P);
    std::vector<Tape::Var> dirs = {tape.constant(axis_direction_rows(2, 0, m)),
                                   tape.constant(axis_direction_rows(2, 1, m))};
    TapePass rho = net_pass(tape, tr, pin, dirs, {{1, 1}});
    TapePass e = net_pass(tape, te, pin, dirs, {{1, 1}, {0, 1}});

    Tape::Var resid1 = tape.add(tape.sub(rho.d[0], rho.dd[0]),
                                tape.add(tape.mul(rho.d[1], e.value), tape.mul(rho.value, e.d[1])));
    Tape::Var sse1 = tape.sum_sq(resid1);
    if (!std::isfinite(tape.scalar(sse1))) locate_nonfinite(tape.value(resid1), "pnp loss ge1");
    s.sse[0] += tape.scalar(sse1);
    s.n[0] += m;
    const Eigen::MatrixXd& rv = tape.value(resid1);
    for (Eigen::Index i = 0; i < m; ++i) out.point_ge1[c0 + i] = rv(0, i) * rv(0, i);

    Tape::Var g = tape.affine(tape.sub(e.d[1], rho.value), 1.0, problem.h);
    Tape::Var gt = tape.sub(e.dd[1], rho.d[0]);
    Tape::Var gx = tape.sub(e.dd[0], rho.d[1]);
    Tape::Var sse2 = tape.add(tape.sum_sq(g), tape.add(tape.sum_sq(gt), tape.sum_sq(gx)));
    if (!std::isfinite(tape.scalar(sse2))) locate_nonfinite(tape.value(g), "pnp loss ge2");
    s.sse[1] += tape.scalar(sse2);
    s.n[1] += m;

    tape.backward(sse1);
    rg[0].accumulate(tr.gradient(tape), 1.0);
    eg[0].accumulate(te.gradient(tape), 1.0);
    tape.backward(sse2);
    rg[1].accumulate(tr.gradient(tape), 1.0);
    eg[1].accumulate(te.gradient(tape), 1.0);
  }

  if (!batch.initial_x.empty()) {
    const Eigen::Index m = static_cast<Eigen::Index>(batch.initial_x.size());
    Eigen::MatrixXd P(2, m);
    Eigen::RowVectorXd rho_target(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      P(0, i) = 0.0;
      P(1, i) = batch.initial_x[i];
      rho_target(i) = problem.rho0(batch.initial_x[i]);
    }
    {
      Tape tape;
      TapeNet tr = TapeNet::attach(tape, rho_net);
      TapePass rho = net_pass(tape, tr, tape.constant(P));
      Tape::Var resid = tape.sub(rho.value, tape.constant(rho_target));
      Tape::Var sse = tape.sum_sq(resid);
      if (!std::isfinite(tape.scalar(sse))) locate_nonfinite(tape.value(resid), "pnp loss ic1");
      s.sse[2] += tape.scalar(sse);
      s.n[2] += m;
      tape.backward(sse);
      rg[2].accumulate(tr.gradient(tape), 1.0);
    }
    {
      const std::vector<double> tvals = pnp_initial_e_target(problem, batch.initial_x);
      Eigen::RowVectorXd e_target(m);
      for (Eigen::Index i = 0; i < m; ++i) e_target(i) = tvals[i];
      Tape tape;
      TapeNet te = TapeNet::attach(tape, e_net);
      TapePass e = net_pass(tape, te, tape.constant(P));
      Tape::Var resid = tape.sub(e.value, tape.constant(e_target));
      Tape::Var sse = tape.sum_sq(resid);
      if (!std::isfinite(tape.scalar(sse))) locate_nonfinite(tape.value(resid), "pnp loss ic2");
      s.sse[3] += tape.scalar(sse);
      s.n[3] += m;
      tape.backward(sse);
      eg[3].accumulate(te.gradient(tape), 1.0);
    }
  }

  if (!batch.boundary_ts.empty()) {
    const Eigen::Index m = static_cast<Eigen::Index>(batch.boundary_ts.size());
    Eigen::MatrixXd P(2, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      P(0, i) = batch.boundary_ts[i].first;
      P(1, i) = batch.boundary_ts[i].second < 0 ? problem.x_min : problem.x_max;
    }
    {
      Tape tape;
      TapeNet tr = TapeNet::attach(tape, rho_net);
      Tape::Var pin = tape.constant(P);
      TapePass rho = net_pass(tape, tr, pin, {tape.constant(axis_direction_rows(2, 1, m))});
      Tape::Var sse = tape.sum_sq(rho.d[0]);
      if (!std::isfinite(tape.scalar(sse))) locate_nonfinite(tape.value(rho.d[0]), "pnp loss bc1");
      s.sse[4] += tape.scalar(sse);
      s.n[4] += m;
      tape.backward(sse);
      rg[4].accumulate(tr.gradient(tape), 1.0);
    }
    {
      Tape tape;
      TapeNet te = TapeNet::attach(tape, e_net);
      Tape::Var pin = tape.constant(P);
      TapePass e = net_pass(tape, te, pin, {tape.constant(axis_direction_rows(2, 0, m))});
      Tape::Var sse = tape.add(tape.sum_sq(e.value), tape.sum_sq(e.d[0]));
      if (!std::isfinite(tape.scalar(sse))) locate_nonfinite(tape.value(e.value), "pnp loss bc2");
      s.sse[5] += tape.scalar(sse);
      s.n[5] += m;
      tape.backward(sse);
      eg[5].accumulate(te.gradient(tape), 1.0);
    }
  }

  for (int c = 0; c < 6; ++c)
    if (!std::isfinite(s.sse[c]))
      throw NumericError(std::string("pnp loss ") + kComponentNames[c] + ": non-finite value");
  out.loss = finalize(s, mode);

  double factors[6];
  component_factors(s, mode, factors);
  out.rho_grad = ParamGradient::zeros_like(rho_net);
  out.e_grad = ParamGradient::zeros_like(e_net);
  for (int c = 0; c < 6; ++c) {
    if (factors[c] == 0.0) continue;
    out.rho_grad.accumulate(rg[c], factors[c]);
    out.e_grad.accumulate(eg[c], factors[c]);
  }
  return out;
}

DiagnosticsRecord diagnostics_pnp_fields(const std::function<double(double, double)>& rho,
                                         const std::function<double(double, double)>& e,
                                         const std::vector<double>& times, const Grid1D& x_grid,
                                         const PnpProblem& problem) {
  const PnpEquilibrium eq = pnp_equilibrium(problem);
  const auto wx = x_grid.trapezoid_weights();
  DiagnosticsRecord rec;
  rec.times = times;
  std::vector<double> rho_row(x_grid.size()), c_row(x_grid.size(), eq.c_pnp);
  for (double t : times) {
    double mass = 0, fe = 0, e_max = 0;
    for (int i = 0; i < x_grid.size(); ++i) {
      const double r = rho(t, x_grid.nodes[i]);
      const double ev = e(t, x_grid.nodes[i]);
      rho_row[i] = r;
      if (r <= 0.0) ++rec.clamped_samples;
      mass += wx[i] * r;
      fe += wx[i] * (xlogx(r) + 0.5 * ev * ev);
      e_max = std::max(e_max, std::abs(ev));
    }
    rec.mass_rho.push_back(mass);
    rec.fe_rho.push_back(fe);
    rec.l2_rho_to_eq.push_back(grid_norms(rho_row, c_row, x_grid).l2);
    rec.e_linf.push_back(e_max);
  }

  // log-linear decay fit on the positive part of FE - FE_inf
  std::vector<double> ft, fy;
  for (size_t i = 0; i < rec.times.size(); ++i) {
    const double gap = rec.fe_rho[i] - eq.fe_inf;
    if (gap > 1e-6) {
      ft.push_back(rec.times[i]);
      fy.push_back(gap);
    }
  }
  rec.fe_fit = fit_exponential_decay(ft, fy);
  return rec;
}

DiagnosticsRecord diagnostics_pnp(const FieldNetPair& nets, const std::vector<double>& times,
                                  const Grid1D& x_grid, const PnpProblem& problem) {
  auto rho = [&](double t, double x) {
    const double in[2] = {t, x};
    return forward(nets.solution_net, in);
  };
  auto e = [&](double t, double x) {
    const double in[2] = {t, x};
    return forward(nets.force_net, in);
  };
  return diagnostics_pnp_fields(rho, e, times, x_grid, problem);
}

}  // namespace vpfpnn
