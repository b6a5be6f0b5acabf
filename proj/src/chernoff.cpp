#include "qi/chernoff.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qi {
namespace {

constexpr double kPureNuTol = 1e-9;
constexpr double kSGridPoints = 200;  // 201 samples including endpoints
constexpr double kSRefineTol = 1e-8;
constexpr double kBoundaryTol = 1e-6;

// Fixed-base power: the base is a channel constant, s is the variable, so the
// limit convention at the endpoints is 0^p = 0 for every p in [0,1].
double powz(double base, double expo) {
  return base <= 0.0 ? 0.0 : std::pow(base, expo);
}

// Normal-mode description of one Gaussian state.
struct ModeData {
  Eigen::VectorXd disp;
  Eigen::MatrixXd s;  // symplectic with sigma = s diag(nu_k I2) s^T
  std::vector<double> nu;
  Eigen::MatrixXd sigma;
};

ModeData mode_data(const GaussianState& state) {
  NormalForm nf = williamson(state.cov);
  return ModeData{state.disp, std::move(nf.S), std::move(nf.nu), state.cov};
}

Eigen::MatrixXd symplectic_inverse(const Eigen::MatrixXd& s) {
  const int n = static_cast<int>(s.rows()) / 2;
  const Eigen::MatrixXd omega = symplectic_form(n);
  return omega * s.transpose() * omega.transpose();
}

// tr(rho_full * Pi), Pi the support projector of proj. Obtained as the
// interior limit of tr(rho_full^1 rho_proj^p) for p -> 0: each mixed mode of
// proj saturates to a flat factor and drops out, each pure mode contributes a
// Gaussian projector.
double support_overlap(const ModeData& full, const ModeData& proj) {
  const int n = static_cast<int>(proj.nu.size());
  std::vector<int> pure;
  for (int k = 0; k < n; ++k) {
    if (proj.nu[k] <= 1.0 + kPureNuTol) {
      pure.push_back(2 * k);
      pure.push_back(2 * k + 1);
    }
  }
  if (pure.empty()) return 1.0;

  const Eigen::MatrixXd sinv = symplectic_inverse(proj.s);
  const Eigen::MatrixXd b = sinv * full.sigma * sinv.transpose();
  const Eigen::VectorXd delta = sinv * (full.disp - proj.disp);

  const int np = static_cast<int>(pure.size());
  Eigen::MatrixXd bpp(np, np);
  Eigen::VectorXd dp(np);
  for (int i = 0; i < np; ++i) {
    dp(i) = delta(pure[i]);
    for (int j = 0; j < np; ++j) bpp(i, j) = b(pure[i], pure[j]);
  }
  bpp += Eigen::MatrixXd::Identity(np, np);

  Eigen::LLT<Eigen::MatrixXd> llt(bpp);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("support_overlap: projector block not positive definite");
  }
  double logdet = 0.0;
  for (int i = 0; i < np; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  const double quad = dp.dot(llt.solve(dp));
  return std::exp(0.5 * np * std::log(2.0) - 0.5 * logdet - 0.5 * quad);
}

// tr(rho0^s rho1^(1-s)) from normal-mode data. Interior s only needs the
// rescaled thermal factors; the endpoints delegate to support_overlap.
double q_s_normal(double s, const ModeData& a, const ModeData& b) {
  if (s <= 0.0) return support_overlap(b, a);
  if (s >= 1.0) return support_overlap(a, b);

  const int n = static_cast<int>(a.nu.size());
  double logpref = 0.0;
  Eigen::VectorXd la(2 * n), lb(2 * n);
  for (int k = 0; k < n; ++k) {
    logpref += std::log(g_factor(s, a.nu[k])) + std::log(g_factor(1.0 - s, b.nu[k]));
    la(2 * k) = la(2 * k + 1) = lambda_factor(s, a.nu[k]);
    lb(2 * k) = lb(2 * k + 1) = lambda_factor(1.0 - s, b.nu[k]);
  }
  Eigen::MatrixXd sig = a.s * la.asDiagonal() * a.s.transpose() +
                        b.s * lb.asDiagonal() * b.s.transpose();
  sig = 0.5 * (sig + sig.transpose());

  Eigen::LLT<Eigen::MatrixXd> llt(sig);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("q_s: combined covariance not positive definite");
  }
  double logdet = 0.0;
  for (int i = 0; i < 2 * n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  const Eigen::VectorXd delta = b.disp - a.disp;
  const double quad = delta.dot(llt.solve(delta));
  return std::exp(logpref + n * std::log(2.0) - 0.5 * logdet - 0.5 * quad);
}

void check_s_domain(double s) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw std::invalid_argument("s must lie in [0,1]");
  }
}

}  // namespace

double g_factor(double p, double x) {
  if (!(p > 0.0)) throw std::invalid_argument("g_factor: p must be positive");
  if (x < 1.0 - kPureNuTol) throw std::domain_error("g_factor: x must be >= 1");
  if (x <= 1.0 + kPureNuTol) return 1.0;
  const double l = std::log1p(2.0 / (x - 1.0));
  return std::pow(2.0 / (x - 1.0), p) / std::expm1(p * l);
}

double lambda_factor(double p, double x) {
  if (!(p > 0.0)) throw std::invalid_argument("lambda_factor: p must be positive");
  if (x < 1.0 - kPureNuTol) throw std::domain_error("lambda_factor: x must be >= 1");
  if (x <= 1.0 + kPureNuTol) return 1.0;
  const double l = std::log1p(2.0 / (x - 1.0));
  return 1.0 + 2.0 / std::expm1(p * l);
}

double q_s_coherent(double s, const TargetParams& params, double ns) {
  check_s_domain(s);
  params.validate();
  if (ns < 0.0) throw std::invalid_argument("Ns must be >= 0");

  const double nb = params.nbar;
  const double t = params.t();
  const double taut = params.tau() * t;
  const double m = nb * taut;

  const double den =
      powz(1.0 + nb, s) * powz(1.0 + m, 1.0 - s) - nb * powz(taut, 1.0 - s);

  const double arg = params.kappa * t * ns;
  double expo = 0.0;
  if (arg > 0.0) {
    const double a1 = powz(1.0 + nb, s);
    const double b1 = powz(nb, s);
    const double inf = std::numeric_limits<double>::infinity();
    const double d1 = (a1 - b1 > 0.0) ? b1 / (a1 - b1) : inf;
    const double w = (m > 0.0) ? m / (1.0 + m) : 0.0;
    const double u = powz(w, 1.0 - s);
    const double d2 = (1.0 - u > 0.0) ? 1.0 / (1.0 - u) : inf;
    const double dd = d1 + d2;
    expo = std::isinf(dd) ? 0.0 : arg / dd;
  }
  return std::exp(-expo) / den;
}

double q_s_tmsv(double s, const TargetParams& params, double ns) {
  check_s_domain(s);
  params.validate();
  if (ns < 0.0) throw std::invalid_argument("Ns must be >= 0");

  const double sv = 2.0 * ns + 1.0;
  const double b0 = 2.0 * params.nbar + 1.0;
  const double bv = 2.0 * params.nbar * params.t() * params.tau() + 1.0;
  const double av = 2.0 * params.kappa * ns * params.t() + bv;
  const double cq = 2.0 * std::sqrt(params.t() * ns * (ns + 1.0));
  const double sum = av + sv;
  const double disc = sum * sum - 4.0 * params.kappa * cq * cq;

  // Degenerate normal modes: hand off to the numerically diagonalized path.
  if (disc < 1e-12 * sum * sum) {
    const HypothesisPair pair = rho_pair_tmsv_closed(params, ns);
    return q_s_general(s, pair.rho0, pair.rho1);
  }

  const double rt = std::sqrt(disc);
  const double nu1 = 0.5 * (av - sv + rt);
  const double nu2 = 0.5 * (sv - av + rt);

  if (s <= 0.0 || s >= 1.0) {
    const double xp = std::sqrt((sum + rt) / (2.0 * rt));
    const double xm = std::sqrt(std::max(0.0, (sum - rt) / (2.0 * rt)));
    Eigen::MatrixXd s1 = Eigen::MatrixXd::Zero(4, 4);
    s1(0, 0) = s1(1, 1) = s1(2, 2) = s1(3, 3) = xp;
    s1(0, 2) = s1(2, 0) = xm;
    s1(1, 3) = s1(3, 1) = -xm;
    const HypothesisPair pair = rho_pair_tmsv_closed(params, ns);
    ModeData a{pair.rho0.disp, Eigen::MatrixXd::Identity(4, 4), {b0, sv}, pair.rho0.cov};
    ModeData b{pair.rho1.disp, std::move(s1), {nu1, nu2}, pair.rho1.cov};
    return (s <= 0.0) ? support_overlap(b, a) : support_overlap(a, b);
  }

  const double xp2 = (sum + rt) / (2.0 * rt);
  const double xm2 = std::max(0.0, (sum - rt) / (2.0 * rt));
  const double xpxm = std::sqrt(xp2 * xm2);
  const double l1 = lambda_factor(1.0 - s, nu1);
  const double l2 = lambda_factor(1.0 - s, nu2);
  const double sig_p = l1 * xp2 + l2 * xm2;
  const double sig_m = l1 * xm2 + l2 * xp2;
  const double om = (l1 + l2) * xpxm;

  const double num = 4.0 * g_factor(s, b0) * g_factor(s, sv) *
                     g_factor(1.0 - s, nu1) * g_factor(1.0 - s, nu2);
  const double den = (sig_p + lambda_factor(s, b0)) * (sig_m + lambda_factor(s, sv)) -
                     om * om;
  return num / den;
}

double q_s_general(double s, const GaussianState& rho0, const GaussianState& rho1) {
  check_s_domain(s);
  if (rho0.modes() != rho1.modes()) {
    throw std::invalid_argument("q_s_general: states must have equal mode count");
  }
  return q_s_normal(s, mode_data(rho0), mode_data(rho1));
}

ChernoffResult minimize_s(const std::function<double(double)>& q_fn) {
  ChernoffResult res;
  res.s_samples.reserve(kSGridPoints + 1);
  double best_s = 0.0;
  double best_q = std::numeric_limits<double>::infinity();
  auto eval = [&](double s) {
    const double v = q_fn(s);
    if (!std::isfinite(v)) {
      throw std::runtime_error("minimize_s: Q_s not finite at s = " + std::to_string(s));
    }
    if (v < best_q) {
      best_q = v;
      best_s = s;
    }
    return v;
  };

  int best_idx = 0;
  for (int i = 0; i <= kSGridPoints; ++i) {
    const double s = static_cast<double>(i) / kSGridPoints;
    const double v = eval(s);
    res.s_samples.emplace_back(s, v);
    if (v == best_q) best_idx = i;
  }

  const double h = 1.0 / kSGridPoints;
  double a = std::max(0.0, best_idx * h - h);
  double b = std::min(1.0, best_idx * h + h);
  constexpr double invphi = 0.6180339887498949;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = eval(c);
  double fd = eval(d);
  while (b - a > kSRefineTol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = eval(d);
    }
  }

  res.s_opt = best_s;
  res.q = best_q;
  res.half_q = 0.5 * best_q;
  res.at_boundary = (best_s <= kBoundaryTol || best_s >= 1.0 - kBoundaryTol);
  return res;
}

double m_copy_error_bound(double q, int m) {
  if (m < 1) throw std::invalid_argument("m_copy_error_bound: M must be >= 1");
  if (!(q > 0.0 && q <= 1.0 + 1e-12)) {
    throw std::invalid_argument("m_copy_error_bound: q must lie in (0,1]");
  }
  return 0.5 * std::pow(q, m);
}

ChernoffResult chernoff_coherent(const TargetParams& params, double ns) {
  params.validate();
  return minimize_s([&](double s) { return q_s_coherent(s, params, ns); });
}

ChernoffResult chernoff_tmsv(const TargetParams& params, double ns) {
  params.validate();
  return minimize_s([&](double s) { return q_s_tmsv(s, params, ns); });
}

AdvantageResult quantum_advantage(const TargetParams& params, double ns, int m) {
  if (m < 1) throw std::invalid_argument("quantum_advantage: M must be >= 1");
  AdvantageResult out;
  out.m = m;
  out.q_cs = chernoff_coherent(params, ns).q;
  out.q_tmsv = chernoff_tmsv(params, ns).q;
  out.delta_m = std::pow(out.q_cs, m) - std::pow(out.q_tmsv, m);
  return out;
}

double limit_low_loss_cs(const TargetParams& params, double ns) {
  params.validate();
  if (ns < 0.0) throw std::invalid_argument("Ns must be >= 0");
  const double num = params.kappa * ns;
  const double den = 2.0 * params.nbar * (2.0 - params.absorption - params.kappa);
  if (den <= 0.0) return num == 0.0 ? 1.0 : 0.0;
  return std::exp(-num / den);
}

double limit_low_loss_tmsv(const TargetParams& params, double ns) {
  params.validate();
  if (ns < 0.0) throw std::invalid_argument("Ns must be >= 0");
  const double num = params.kappa * ns;
  const double den = params.nbar * (1.0 - params.absorption - params.kappa);
  if (den <= 0.0) return num == 0.0 ? 1.0 : 0.0;
  return std::exp(-num / den);
}

double limit_full_absorption(double nbar) {
  if (nbar < 0.0) throw std::invalid_argument("nbar must be >= 0");
  return 1.0 / (1.0 + nbar);
}

}  // namespace qi
