#include "vpfpnn/vpfp.hpp"

#include <algorithm>
#include <cmath>

#include "vpfpnn/errors.hpp"

namespace vpfpnn {

namespace {
constexpr int kQuadX = 2001;   // fine x-quadrature nodes for masses and targets
constexpr int kQuadV = 4001;   // fine v-quadrature nodes (puts nodes on +-4)
}  // namespace

VpfpProblem VpfpProblem::standard(double epsilon, double t_horizon) {
  auto f0 = [](double x, double v) {
    if (v <= -4.0 || v >= 4.0) return 0.0;
    return std::exp(x - 1.0) * (1.0 - std::cos(0.5 * M_PI * v));
  };
  auto rho0 = [](double x) { return 8.0 * std::exp(x - 1.0); };
  return from_initial_condition(epsilon, t_horizon, f0, rho0);
}

VpfpProblem VpfpProblem::from_initial_condition(double epsilon, double t_horizon,
                                                std::function<double(double, double)> f0,
                                                std::function<double(double)> rho0) {
  VpfpProblem p;
  p.epsilon = epsilon;
  p.t_horizon = t_horizon;
  p.f0 = std::move(f0);

  const Grid1D xg = Grid1D::uniform(p.x_min, p.x_max, kQuadX);
  const Grid1D vg = Grid1D::uniform(p.v_min, p.v_max, kQuadV);
  if (!rho0) {
    auto f0_copy = p.f0;
    rho0 = [f0_copy, vg](double x) {
      std::vector<double> vals(vg.size());
      for (int j = 0; j < vg.size(); ++j) vals[j] = f0_copy(x, vg.nodes[j]);
      return trapezoid(vals, vg);
    };
  }
  p.rho0 = std::move(rho0);

  std::vector<double> rho_vals(xg.size());
  for (int i = 0; i < xg.size(); ++i) rho_vals[i] = p.rho0(xg.nodes[i]);
  p.f0_mass = trapezoid(rho_vals, xg);
  p.h = p.f0_mass / p.omega_len();
  p.validate();
  return p;
}

void VpfpProblem::validate() const {
  if (!(epsilon > 0)) throw ConfigError("VpfpProblem: epsilon must be positive");
  if (!(t_horizon > 0)) throw ConfigError("VpfpProblem: horizon must be positive");
  const double imbalance = f0_mass - h * omega_len();
  if (std::abs(imbalance) > 1e-8)
    throw ConfigError("VpfpProblem: neutrality violated by " + std::to_string(imbalance));
}

VpfpEquilibrium equilibrium_targets(const VpfpProblem& problem) {
  VpfpEquilibrium eq;
  const double mass = problem.f0_mass;
  eq.c_vpfp = mass / problem.omega_len();
  eq.ke_inf = mass / problem.omega_len();
  eq.ent_inf = -mass * std::log(mass / (problem.omega_len() * std::sqrt(2.0 * M_PI))) + 0.5 * mass;
  eq.ee_inf = 0.0;
  eq.fe_inf = eq.ke_inf - eq.ent_inf + eq.ee_inf;
  return eq;
}

double residual_ge1(const ValueAndInputDerivs& f, double e_value, double v, double epsilon) {
  const double eps2 = epsilon * epsilon;
  // d_v(v f + d_v f) = f + v f_v + f_vv
  return eps2 * f.d_t + epsilon * v * f.d_x + epsilon * e_value * f.d_v -
         (f.value + v * f.d_v + f.d_vv);
}

double residual_poisson(double e_dx, double rho_from_f, double h_at_x) {
  return e_dx - rho_from_f + h_at_x;
}

std::vector<double> initial_e_target(const VpfpProblem& problem, std::span<const double> xs) {
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

const char* kVpfpComponentNames[6] = {"ge1", "ge2", "ic1", "ic2", "bc1", "bc2"};

void check_component_finite(double sse, int c, const char* system) {
  if (!std::isfinite(sse))
    throw NumericError(std::string(system) + " loss " + kVpfpComponentNames[c] + ": non-finite value");
}

}  // namespace

LossBreakdown vpfp_loss_from_bundles(const KineticBundleFn& f_bundle, const FieldBundleFn& e_bundle,
                                     const CollocationBatch& batch, const VpfpProblem& problem,
                                     LossMode mode, const VpfpLossOptions& options) {
  ComponentSums s;
  const double eps = problem.epsilon;
  const double ge1_scale = options.scale_ge1_by_eps2 ? 1.0 / (eps * eps) : 1.0;
  const int L = batch.v_block;

  // interior: GE1 pointwise, GE2 per (t,x) block via the v-trapezoid
  for (int blk = 0; blk < batch.n_blocks(); ++blk) {
    const auto [t, x] = batch.interior_tx[blk];
    const ValueAndInputDerivs e = e_bundle(t, x);
    std::vector<double> fvals(L);
    std::vector<double> vnodes(L);
    for (int k = 0; k < L; ++k) {
      const int idx = blk * L + k;
      const double v = batch.interior_v[idx];
      const ValueAndInputDerivs f = f_bundle(t, x, v);
      const double r = ge1_scale * residual_ge1(f, e.value, v, eps);
      if (!std::isfinite(r))
        throw NumericError("vpfp loss ge1: non-finite residual at interior sample " +
                           std::to_string(idx));
      s.sse[0] += r * r;
      fvals[k] = f.value;
      vnodes[k] = v;
    }
    s.n[0] += L;
    const Grid1D vg = Grid1D::from_sorted(std::move(vnodes));
    const double rho = trapezoid(fvals, vg);
    const double r2 = residual_poisson(e.d_x, rho, problem.h);
    s.sse[1] += r2 * r2;
    s.n[1] += 1;
  }

  for (size_t i = 0; i < batch.initial_xv.size(); ++i) {
    const auto [x, v] = batch.initial_xv[i];
    const double d = f_bundle(0.0, x, v).value - problem.f0(x, v);
    s.sse[2] += d * d;
  }
  s.n[2] = static_cast<long>(batch.initial_xv.size());

  const std::vector<double> e0_target = initial_e_target(problem, batch.initial_x);
  for (size_t i = 0; i < batch.initial_x.size(); ++i) {
    const double d = e_bundle(0.0, batch.initial_x[i]).value - e0_target[i];
    s.sse[3] += d * d;
  }
  s.n[3] = static_cast<long>(batch.initial_x.size());

  for (size_t i = 0; i < batch.boundary_t.size(); ++i) {
    const double t = batch.boundary_t[i];
    const double x = batch.boundary_side[i] < 0 ? problem.x_min : problem.x_max;
    const double v = batch.boundary_v[i];
    const double d = f_bundle(t, x, v).value - f_bundle(t, x, -v).value;
    s.sse[4] += d * d;
  }
  s.n[4] = static_cast<long>(batch.boundary_t.size());

  for (const auto& [t, side] : batch.boundary_ts) {
    const double x = side < 0 ? problem.x_min : problem.x_max;
    const double e = e_bundle(t, x).value;
    s.sse[5] += e * e;
  }
  s.n[5] = static_cast<long>(batch.boundary_ts.size());

  for (int c = 0; c < 6; ++c) check_component_finite(s.sse[c], c, "vpfp");
  return finalize(s, mode);
}

LossBreakdown loss_vpfp(const FieldNetPair& nets, const CollocationBatch& batch,
                        const VpfpProblem& problem, LossMode mode, const VpfpLossOptions& options) {
  auto f_bundle = [&](double t, double x, double v) {
    const double in[3] = {t, x, v};
    return eval_with_input_derivs(nets.solution_net, in, DerivRequest::kinetic());
  };
  auto e_bundle = [&](double t, double x) {
    const double in[2] = {t, x};
    DerivRequest req;
    req.d_x = true;
    return eval_with_input_derivs(nets.force_net, in, req);
  };
  return vpfp_loss_from_bundles(f_bundle, e_bundle, batch, problem, mode, options);
}

// ---------------------------------------------------------------------------
// Tape path
// ---------------------------------------------------------------------------

namespace {

// Mode-dependent gradient weights: d(component)/d(sse).
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

VpfpLossGrad vpfp_loss_and_grad(const MlpParams& f_net, const MlpParams& e_net,
                                const CollocationBatch& batch, const VpfpProblem& problem,
                                LossMode mode, const VpfpLossOptions& options) {
  const double eps = problem.epsilon;
  const double ge1_scale = options.scale_ge1_by_eps2 ? 1.0 / (eps * eps) : 1.0;
  const int L = batch.v_block;
  const int nb = batch.n_blocks();

  ComponentSums s;
  std::vector<ParamGradient> fg(6, ParamGradient::zeros_like(f_net));
  std::vector<ParamGradient> eg(6, ParamGradient::zeros_like(e_net));
  VpfpLossGrad out;
  out.block_ge1.assign(nb, 0.0);

  // Interior chunks: GE1 and GE2 share one tape per chunk, two backward roots.
  const int chunk = std::max(1, options.chunk_blocks);
  for (int c0 = 0; c0 < nb; c0 += chunk) {
    const int c1 = std::min(nb, c0 + chunk);
    const int nbc = c1 - c0;
    const Eigen::Index cols = static_cast<Eigen::Index>(nbc) * L;

    Eigen::MatrixXd X(3, cols);
    Eigen::RowVectorXd vrow(cols);
    Eigen::MatrixXd P(2, nbc);
    Eigen::RowVectorXd wrow(cols);
    for (int b = 0; b < nbc; ++b) {
      const auto [t, x] = batch.interior_tx[c0 + b];
      P(0, b) = t;
      P(1, b) = x;
      std::vector<double> vnodes(L);
      for (int k = 0; k < L; ++k) {
        const int src = (c0 + b) * L + k;
        const Eigen::Index dst = static_cast<Eigen::Index>(b) * L + k;
        X(0, dst) = batch.interior_t[src];
        X(1, dst) = batch.interior_x[src];
        X(2, dst) = batch.interior_v[src];
        vrow(dst) = batch.interior_v[src];
        vnodes[k] = batch.interior_v[src];
      }
      const auto w = Grid1D::from_sorted(std::move(vnodes)).trapezoid_weights();
      for (int k = 0; k < L; ++k) wrow(static_cast<Eigen::Index>(b) * L + k) = w[k];
    }

    Tape tape;
    TapeNet tf = TapeNet::attach(tape, f_net);
    TapeNet te = TapeNet::attach(tape, e_net);
    Tape::Var xin = tape.constant(X);
    Tape::Var pin = tape.constant(P);
    Tape::Var vconst = tape.constant(vrow);
    std::vector<Tape::Var> dirs = {tape.constant(axis_direction_rows(3, 0, cols)),
                                   tape.constant(axis_direction_rows(3, 1, cols)),
                                   tape.constant(axis_direction_rows(3, 2, cols))};
    TapePass f = net_pass(tape, tf, xin, dirs, {{2, 2}});

    TapePass e_pair = net_pass(tape, te, pin, {tape.constant(axis_direction_rows(2, 1, nbc))}, {});
    Tape::Var e_rep = tape.repeat_cols(e_pair.value, L);

    Tape::Var lhs = tape.add(tape.affine(f.d[0], eps * eps, 0.0),
                             tape.add(tape.affine(tape.mul(vconst, f.d[1]), eps, 0.0),
                                      tape.affine(tape.mul(e_rep, f.d[2]), eps, 0.0)));
    Tape::Var rhs = tape.add(f.value, tape.add(tape.mul(vconst, f.d[2]), f.dd[0]));
    Tape::Var resid = tape.sub(lhs, rhs);
    if (ge1_scale != 1.0) resid = tape.affine(resid, ge1_scale, 0.0);

    Tape::Var sse1 = tape.sum_sq(resid);
    if (!std::isfinite(tape.scalar(sse1))) locate_nonfinite(tape.value(resid), "vpfp loss ge1");
    s.sse[0] += tape.scalar(sse1);
    s.n[0] += cols;
    const Eigen::MatrixXd& rv = tape.value(resid);
    for (int b = 0; b < nbc; ++b) {
      double acc = 0.0;
      for (int k = 0; k < L; ++k) acc += rv(0, static_cast<Eigen::Index>(b) * L + k) *
                                         rv(0, static_cast<Eigen::Index>(b) * L + k);
      out.block_ge1[c0 + b] = acc / L;
    }

    Tape::Var rho = tape.block_weighted_sum(f.value, wrow, L);
    Tape::Var resid2 = tape.affine(tape.sub(e_pair.d[0], rho), 1.0, problem.h);
    Tape::Var sse2 = tape.sum_sq(resid2);
    if (!std::isfinite(tape.scalar(sse2))) locate_nonfinite(tape.value(resid2), "vpfp loss ge2");
    s.sse[1] += tape.scalar(sse2);
    s.n[1] += nbc;

    tape.backward(sse1);
    fg[0].accumulate(tf.gradient(tape), 1.0);
    eg[0].accumulate(te.gradient(tape), 1.0);
    tape.backward(sse2);
    fg[1].accumulate(tf.gradient(tape), 1.0);
    eg[1].accumulate(te.gradient(tape), 1.0);
  }

  // IC1: f(0,x,v) against f0
  if (!batch.initial_xv.empty()) {
    const Eigen::Index m = static_cast<Eigen::Index>(batch.initial_xv.size());
    Eigen::MatrixXd X(3, m);
    Eigen::RowVectorXd target(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto [x, v] = batch.initial_xv[i];
      X(0, i) = 0.0;
      X(1, i) = x;
      X(2, i) = v;
      target(i) = problem.f0(x, v);
    }
    Tape tape;
    TapeNet tf = TapeNet::attach(tape, f_net);
    TapePass f = net_pass(tape, tf, tape.constant(X));
    Tape::Var resid = tape.sub(f.value, tape.constant(target));
    Tape::Var sse = tape.sum_sq(resid);
    if (!std::isfinite(tape.scalar(sse))) locate_nonfinite(tape.value(resid), "vpfp loss ic1");
    s.sse[2] += tape.scalar(sse);
    s.n[2] += m;
    tape.backward(sse);
    fg[2].accumulate(tf.gradient(tape), 1.0);
  }

  // IC2: E(0,x) against the cumulative-charge target
  if (!batch.initial_x.empty()) {
    const Eigen::Index m = static_cast<Eigen::Index>(batch.initial_x.size());
    const std::vector<double> tvals = initial_e_target(problem, batch.initial_x);
    Eigen::MatrixXd P(2, m);
    Eigen::RowVectorXd target(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      P(0, i) = 0.0;
      P(1, i) = batch.initial_x[i];
      target(i) = tvals[i];
    }
    Tape tape;
    TapeNet te = TapeNet::attach(tape, e_net);
    TapePass e = net_pass(tape, te, tape.constant(P));
    Tape::Var resid = tape.sub(e.value, tape.constant(target));
    Tape::Var sse = tape.sum_sq(resid);
    if (!std::isfinite(tape.scalar(sse))) locate_nonfinite(tape.value(resid), "vpfp loss ic2");
    s.sse[3] += tape.scalar(sse);
    s.n[3] += m;
    tape.backward(sse);
    eg[3].accumulate(te.gradient(tape), 1.0);
  }

  // BC1: specular mismatch f(t,x,v) - f(t,x,-v) on the walls
  if (!batch.boundary_t.empty()) {
    const Eigen::Index m = static_cast<Eigen::Index>(batch.boundary_t.size());
    Eigen::MatrixXd X(3, m), Xm(3, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double x = batch.boundary_side[i] < 0 ? problem.x_min : problem.x_max;
      X(0, i) = batch.boundary_t[i];
      X(1, i) = x;
      X(2, i) = batch.boundary_v[i];
      Xm(0, i) = batch.boundary_t[i];
      Xm(1, i) = x;
      Xm(2, i) = -batch.boundary_v[i];
    }
    Tape tape;
    TapeNet tf = TapeNet::attach(tape, f_net);
    TapePass f1 = net_pass(tape, tf, tape.constant(X));
    TapePass f2 = net_pass(tape, tf, tape.constant(Xm));
    Tape::Var resid = tape.sub(f1.value, f2.value);
    Tape::Var sse = tape.sum_sq(resid);
    if (!std::isfinite(tape.scalar(sse))) locate_nonfinite(tape.value(resid), "vpfp loss bc1");
    s.sse[4] += tape.scalar(sse);
    s.n[4] += m;
    tape.backward(sse);
    fg[4].accumulate(tf.gradient(tape), 1.0);
  }

  // BC2: E on the walls
  if (!batch.boundary_ts.empty()) {
    const Eigen::Index m = static_cast<Eigen::Index>(batch.boundary_ts.size());
    Eigen::MatrixXd P(2, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      P(0, i) = batch.boundary_ts[i].first;
      P(1, i) = batch.boundary_ts[i].second < 0 ? problem.x_min : problem.x_max;
    }
    Tape tape;
    TapeNet te = TapeNet::attach(tape, e_net);
    TapePass e = net_pass(tape, te, tape.constant(P));
    Tape::Var sse = tape.sum_sq(e.value);
    if (!std::isfinite(tape.scalar(sse))) locate_nonfinite(tape.value(e.value), "vpfp loss bc2");
    s.sse[5] += tape.scalar(sse);
    s.n[5] += m;
    tape.backward(sse);
    eg[5].accumulate(te.gradient(tape), 1.0);
  }

  for (int c = 0; c < 6; ++c) check_component_finite(s.sse[c], c, "vpfp");
  out.loss = finalize(s, mode);

  double factors[6];
  component_factors(s, mode, factors);
  out.f_grad = ParamGradient::zeros_like(f_net);
  out.e_grad = ParamGradient::zeros_like(e_net);
  for (int c = 0; c < 6; ++c) {
    if (factors[c] == 0.0) continue;
    out.f_grad.accumulate(fg[c], factors[c]);
    out.e_grad.accumulate(eg[c], factors[c]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

namespace {

void vpfp_diag_row(const Eigen::MatrixXd& F, const Eigen::VectorXd& E, const Grid1D& x_grid,
                   const Grid1D& v_grid, double c_vpfp, DiagnosticsRecord& rec) {
  const auto wx = x_grid.trapezoid_weights();
  const auto wv = v_grid.trapezoid_weights();
  double mass = 0, ke = 0, ent_integrand = 0;
  int clamped = 0;
  for (int i = 0; i < x_grid.size(); ++i) {
    for (int j = 0; j < v_grid.size(); ++j) {
      const double w = wx[i] * wv[j];
      const double f = F(i, j);
      const double v = v_grid.nodes[j];
      mass += w * f;
      ke += 0.5 * w * v * v * f;
      if (f <= 0.0) ++clamped;
      ent_integrand += w * xlogx(f);
    }
  }
  double ee = 0, e_max = 0;
  for (int i = 0; i < x_grid.size(); ++i) {
    ee += 0.5 * wx[i] * E(i) * E(i);
    e_max = std::max(e_max, std::abs(E(i)));
  }
  const double ent = -ent_integrand;
  std::vector<double> diff_a(static_cast<size_t>(x_grid.size()) * v_grid.size());
  std::vector<double> diff_b(diff_a.size());
  for (int i = 0; i < x_grid.size(); ++i)
    for (int j = 0; j < v_grid.size(); ++j) {
      diff_a[static_cast<size_t>(i) * v_grid.size() + j] = F(i, j);
      diff_b[static_cast<size_t>(i) * v_grid.size() + j] = c_vpfp * maxwellian(v_grid.nodes[j]);
    }
  const Norms n = grid_norms_2d(diff_a, diff_b, x_grid, v_grid);

  rec.mass.push_back(mass);
  rec.ke.push_back(ke);
  rec.ent.push_back(ent);
  rec.ee.push_back(ee);
  rec.fe.push_back(-ent + ke + ee);
  rec.l1_to_eq.push_back(n.l1);
  rec.l2_to_eq.push_back(n.l2);
  rec.linf_to_eq.push_back(n.linf);
  rec.e_linf.push_back(e_max);
  rec.clamped_samples += clamped;
}

}  // namespace

DiagnosticsRecord diagnostics_vpfp_fields(const std::function<double(double, double, double)>& f,
                                          const std::function<double(double, double)>& e,
                                          const std::vector<double>& times, const Grid1D& x_grid,
                                          const Grid1D& v_grid, const VpfpProblem& problem) {
  const VpfpEquilibrium eq = equilibrium_targets(problem);
  DiagnosticsRecord rec;
  rec.times = times;
  for (double t : times) {
    Eigen::MatrixXd F(x_grid.size(), v_grid.size());
    Eigen::VectorXd E(x_grid.size());
    for (int i = 0; i < x_grid.size(); ++i) {
      for (int j = 0; j < v_grid.size(); ++j) F(i, j) = f(t, x_grid.nodes[i], v_grid.nodes[j]);
      E(i) = e(t, x_grid.nodes[i]);
    }
    vpfp_diag_row(F, E, x_grid, v_grid, eq.c_vpfp, rec);
  }
  return rec;
}

DiagnosticsRecord diagnostics_vpfp(const FieldNetPair& nets, const std::vector<double>& times,
                                   const Grid1D& x_grid, const Grid1D& v_grid,
                                   const VpfpProblem& problem) {
  const VpfpEquilibrium eq = equilibrium_targets(problem);
  DiagnosticsRecord rec;
  rec.times = times;
  const int nx = x_grid.size(), nv = v_grid.size();
  Eigen::MatrixXd X(3, static_cast<Eigen::Index>(nx) * nv);
  Eigen::MatrixXd P(2, nx);
  for (double t : times) {
    for (int i = 0; i < nx; ++i) {
      P(0, i) = t;
      P(1, i) = x_grid.nodes[i];
      for (int j = 0; j < nv; ++j) {
        const Eigen::Index col = static_cast<Eigen::Index>(i) * nv + j;
        X(0, col) = t;
        X(1, col) = x_grid.nodes[i];
        X(2, col) = v_grid.nodes[j];
      }
    }
    const Eigen::RowVectorXd fvals = forward_batch(nets.solution_net, X);
    const Eigen::RowVectorXd evals = forward_batch(nets.force_net, P);
    Eigen::MatrixXd F(nx, nv);
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < nv; ++j) F(i, j) = fvals(static_cast<Eigen::Index>(i) * nv + j);
    vpfp_diag_row(F, evals.transpose(), x_grid, v_grid, eq.c_vpfp, rec);
  }
  return rec;
}

}  // namespace vpfpnn
