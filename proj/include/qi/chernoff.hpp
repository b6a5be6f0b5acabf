#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "qi/gaussian.hpp"
#include "qi/target.hpp"

namespace qi {

struct ChernoffResult {
  double s_opt = 0.0;
  double q = 1.0;
  double half_q = 0.5;
  bool at_boundary = false;
  std::vector<std::pair<double, double>> s_samples;  // (s, Q_s) on the scan grid
};

struct AdvantageResult {
  double delta_m = 0.0;  // Q_CS^M - Q_TMSV^M
  int m = 1;
  double q_cs = 1.0;
  double q_tmsv = 1.0;
};

/// Trace of the p-th power of a normalized thermal mode with symplectic
/// eigenvalue x: 2^p / ((x+1)^p - (x-1)^p). Requires p > 0, x >= 1; equals 1
/// at x = 1.
double g_factor(double p, double x);

/// Symplectic eigenvalue of the renormalized p-th power of a thermal mode:
/// ((x+1)^p + (x-1)^p) / ((x+1)^p - (x-1)^p).
double lambda_factor(double p, double x);

/// tr(rho0^s rho1^(1-s)) for the coherent-probe hypothesis pair, closed form.
/// Endpoints s = 0, 1 follow the support-projector convention (the limit from
/// the interior).
double q_s_coherent(double s, const TargetParams& params, double ns);

/// Same for the TMSV hypothesis pair.
double q_s_tmsv(double s, const TargetParams& params, double ns);

/// tr(rho0^s rho1^(1-s)) for arbitrary Gaussian states of equal mode count,
/// via Williamson normal modes.
double q_s_general(double s, const GaussianState& rho0, const GaussianState& rho1);

/// Minimizes Q_s over s in [0,1]: 201-point uniform scan, then golden-section
/// refinement to |ds| <= 1e-8, with explicit endpoint comparison. Throws if
/// q_fn is not finite anywhere on the grid.
ChernoffResult minimize_s(const std::function<double(double)>& q_fn);

/// 0.5 * q^M, the M-copy error-probability bound.
double m_copy_error_bound(double q, int m);

ChernoffResult chernoff_coherent(const TargetParams& params, double ns);
ChernoffResult chernoff_tmsv(const TargetParams& params, double ns);

AdvantageResult quantum_advantage(const TargetParams& params, double ns, int m);

/// Low-loss closed form for the coherent bound,
/// exp(-kappa Ns / (2 nbar (2 - r - kappa))); valid for kappa*r -> 0, nbar >> 1.
double limit_low_loss_cs(const TargetParams& params, double ns);

/// Low-loss ansatz for the TMSV bound, exp(-kappa Ns / (nbar (1 - r - kappa))).
double limit_low_loss_tmsv(const TargetParams& params, double ns);

/// Full-absorption limit 1/(1+nbar), common to both probes at r = 1.
double limit_full_absorption(double nbar);

}  // namespace qi
