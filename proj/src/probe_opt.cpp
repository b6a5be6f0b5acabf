#include "qi/probe_opt.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qi {
namespace {

constexpr double kSeriesDrop = 1e-14;
constexpr long kSeriesCap = 2000000;

void check_normalized(const std::vector<double>& coeffs) {
  if (coeffs.empty()) throw std::invalid_argument("empty coefficient vector");
  double norm = 0.0;
  for (double c : coeffs) norm += c * c;
  if (std::abs(norm - 1.0) > 1e-10) {
    throw std::invalid_argument("coefficients not normalized, sum C_n^2 = " +
                                std::to_string(norm));
  }
}

double m_mean(double x, double y) {
  if (x <= 0.0 || y <= 0.0) return 0.0;
  const double s = std::sqrt(x) + std::sqrt(y);
  return 4.0 * x * y / (s * s);
}

// Thermal-index series shared by both probe families: the kappa-order
// off-diagonal weight and the r^2-order diagonal weight.
struct ThermalSeries {
  double reflect = 0.0;  // sum (m+1)(lam_m - lam_{m+1})^2 / (sqrt(lam_m)+sqrt(lam_{m+1}))^2
  double absorb = 0.0;   // sum ((m+1) lam_{m+1} - m lam_m)^2 / lam_m
  double tail = 0.0;
};

ThermalSeries thermal_series(double nbar) {
  ThermalSeries out;
  const double w = nbar / (1.0 + nbar);
  double lam = 1.0 / (1.0 + nbar);
  for (long m = 0;; ++m) {
    if (m > kSeriesCap) throw std::runtime_error("thermal series did not converge");
    const double lam1 = lam * w;
    const double sq = std::sqrt(lam) + std::sqrt(lam1);
    const double tr = sq > 0.0 ? (m + 1.0) * (lam - lam1) * (lam - lam1) / (sq * sq) : 0.0;
    const double diff = (m + 1.0) * lam1 - m * lam;
    const double ta = lam > 0.0 ? diff * diff / lam : 0.0;
    out.reflect += tr;
    out.absorb += ta;
    out.tail = std::max(std::abs(tr), std::abs(ta));
    const bool small_terms = tr < kSeriesDrop * std::max(out.reflect, 1e-300) &&
                             ta < kSeriesDrop * std::max(out.absorb, 1e-300);
    if (lam < kSeriesDrop && small_terms) break;
    lam = lam1;
  }
  return out;
}

}  // namespace

double zeta(const std::vector<double>& coeffs) {
  check_normalized(coeffs);
  double z = 0.0;
  for (std::size_t n = 0; n + 1 < coeffs.size(); ++n) {
    z += coeffs[n] * coeffs[n + 1] * std::sqrt(n + 1.0);
  }
  return z;
}

PerturbativeBound xi_single(const std::vector<double>& coeffs,
                            const TargetParams& params) {
  params.validate();
  const double z = zeta(coeffs);
  const ThermalSeries ser = thermal_series(params.nbar);
  PerturbativeBound out;
  out.term_reflect = params.kappa * z * z * ser.reflect;
  out.term_absorb = params.absorption * params.absorption / 8.0 * ser.absorb;
  out.series_tail = ser.tail;
  out.xi = out.term_reflect + out.term_absorb;
  out.q_perturbative = 1.0 - out.xi;
  return out;
}

double two_mode_reflect_term(const std::vector<double>& coeffs_sq,
                             const TargetParams& params) {
  if (params.nbar <= 0.0) {
    throw std::invalid_argument("two-mode bound requires nbar > 0");
  }
  const double w = params.nbar / (1.0 + params.nbar);
  double sum = 0.0;
  for (std::size_t n = 0; n + 1 < coeffs_sq.size(); ++n) {
    sum += (n + 1.0) * m_mean(coeffs_sq[n], w * coeffs_sq[n + 1]);
  }
  return params.kappa / (4.0 * params.nbar) * sum;
}

PerturbativeBound xi_two(const std::vector<double>& coeffs,
                         const TargetParams& params) {
  params.validate();
  if (params.nbar <= 0.0) {
    throw std::invalid_argument("xi_two requires nbar > 0");
  }
  check_normalized(coeffs);
  std::vector<double> sq(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) sq[i] = coeffs[i] * coeffs[i];
  const ThermalSeries ser = thermal_series(params.nbar);
  PerturbativeBound out;
  out.term_reflect = two_mode_reflect_term(sq, params);
  out.term_absorb = params.absorption * params.absorption / 8.0 * ser.absorb;
  out.series_tail = ser.tail;
  out.xi = out.term_reflect + out.term_absorb;
  out.q_perturbative = 1.0 - out.xi;
  return out;
}

std::vector<double> poisson_coeffs(double ns, int cutoff) {
  if (ns < 0.0 || cutoff < 1) throw std::invalid_argument("poisson_coeffs: bad input");
  std::vector<double> c(cutoff);
  double a = std::exp(-0.5 * ns);
  for (int n = 0; n < cutoff; ++n) {
    c[n] = a;
    a *= std::sqrt(ns / (n + 1.0));
  }
  return c;
}

std::vector<double> geometric_coeffs(double ns, int cutoff) {
  if (ns < 0.0 || cutoff < 1) throw std::invalid_argument("geometric_coeffs: bad input");
  std::vector<double> c(cutoff);
  double a = 1.0 / std::sqrt(1.0 + ns);
  const double ratio = std::sqrt(ns / (1.0 + ns));
  for (int n = 0; n < cutoff; ++n) {
    c[n] = a;
    a *= ratio;
  }
  return c;
}

namespace {

// Top eigenvector of the tridiagonal A + 2 mu2 diag(n); Perron positive.
std::pair<Eigen::VectorXd, double> top_mode(double mu2, int cutoff) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(cutoff, cutoff);
  for (int n = 0; n + 1 < cutoff; ++n) {
    m(n, n + 1) = m(n + 1, n) = std::sqrt(n + 1.0);
  }
  for (int n = 0; n < cutoff; ++n) m(n, n) = 2.0 * mu2 * n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd v = es.eigenvectors().col(cutoff - 1);
  int imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v(imax) < 0.0) v = -v;
  return {v, es.eigenvalues()(cutoff - 1)};
}

double mode_energy(const Eigen::VectorXd& v) {
  double e = 0.0;
  for (int n = 0; n < v.size(); ++n) e += n * v(n) * v(n);
  return e;
}

}  // namespace

std::vector<double> optimize_single(double ns, int cutoff) {
  if (ns <= 0.0) throw std::invalid_argument("optimize_single: Ns must be > 0");
  if (cutoff < 3) throw std::invalid_argument("optimize_single: cutoff too small");

  // Energy grows as the multiplier on the number operator weakens, so the
  // constraint is met by bisection on mu2 < 0.
  const double guess = -0.5 / std::sqrt(ns);
  double lo = guess * 8.0;
  double hi = guess / 8.0;
  auto energy_at = [&](double mu2) { return mode_energy(top_mode(mu2, cutoff).first); };
  int expand = 0;
  while (energy_at(lo) > ns) {
    lo *= 4.0;
    if (++expand > 60) throw std::runtime_error("optimize_single: failed to bracket");
  }
  while (energy_at(hi) < ns) {
    hi /= 4.0;
    if (++expand > 120) throw std::runtime_error("optimize_single: failed to bracket");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (energy_at(mid) < ns ? lo : hi) = mid;
  }
  const Eigen::VectorXd v = top_mode(0.5 * (lo + hi), cutoff).first;
  return std::vector<double>(v.data(), v.data() + v.size());
}

double single_stationarity_residual(const std::vector<double>& coeffs, double mu1,
                                    double mu2) {
  const int d = static_cast<int>(coeffs.size());
  double worst = 0.0;
  for (int n = 0; n < d; ++n) {
    double r = 2.0 * coeffs[n] * (mu1 + n * mu2);
    if (n + 1 < d) r += coeffs[n + 1] * std::sqrt(n + 1.0);
    if (n > 0) r += coeffs[n - 1] * std::sqrt(static_cast<double>(n));
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

namespace {

// Euclidean projection onto {x >= 0, sum x = 1, sum n x = ns} by clipping
// and re-solving the two-multiplier correction on the free set.
Eigen::VectorXd project_feasible(Eigen::VectorXd y, double ns) {
  const int d = static_cast<int>(y.size());
  std::vector<bool> free_set(d, true);
  for (int round = 0; round < d + 2; ++round) {
    double s0 = 0, s1 = 0, s2 = 0, r0 = 0, r1 = 0;
    for (int n = 0; n < d; ++n) {
      if (!free_set[n]) continue;
      s0 += 1.0;
      s1 += n;
      s2 += static_cast<double>(n) * n;
      r0 += y(n);
      r1 += n * y(n);
    }
    const double det = s0 * s2 - s1 * s1;
    if (s0 < 2.0 || std::abs(det) < 1e-12) {
      throw std::runtime_error("feasible projection degenerated");
    }
    const double c0 = r0 - 1.0;
    const double c1 = r1 - ns;
    const double alpha = (s2 * c0 - s1 * c1) / det;
    const double beta = (s0 * c1 - s1 * c0) / det;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    bool clipped = false;
    for (int n = 0; n < d; ++n) {
      if (!free_set[n]) continue;
      x(n) = y(n) - alpha - beta * n;
      if (x(n) < 0.0) {
        free_set[n] = false;
        clipped = true;
      }
    }
    if (!clipped) return x;
  }
  throw std::runtime_error("feasible projection did not settle");
}

double objective_sq(const Eigen::VectorXd& x, double w) {
  double f = 0.0;
  for (int n = 0; n + 1 < x.size(); ++n) f += (n + 1.0) * m_mean(x(n), w * x(n + 1));
  return f;
}

Eigen::VectorXd gradient_sq(const Eigen::VectorXd& x, double w) {
  const int d = static_cast<int>(x.size());
  auto dm_dx = [](double a, double b) {
    if (b <= 0.0) return 0.0;
    if (a <= 0.0) return 4.0;
    const double s = std::sqrt(a) + std::sqrt(b);
    return 4.0 * b * std::sqrt(b) / (s * s * s);
  };
  Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
  for (int n = 0; n < d; ++n) {
    if (n + 1 < d) g(n) += (n + 1.0) * dm_dx(x(n), w * x(n + 1));
    if (n > 0) g(n) += n * w * dm_dx(w * x(n), x(n - 1));
  }
  return g;
}

}  // namespace

std::vector<double> random_feasible_sq(double ns, int cutoff, std::mt19937_64& rng) {
  const int levels = std::min(cutoff, static_cast<int>(std::ceil(4.0 * ns)) + 6);
  std::exponential_distribution<double> expo(1.0);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(cutoff);
  for (int n = 0; n < levels; ++n) y(n) = expo(rng);
  y /= y.sum();
  const Eigen::VectorXd x = project_feasible(y, ns);
  return std::vector<double>(x.data(), x.data() + x.size());
}

std::vector<double> optimize_two(double ns, double nbar, int cutoff,
                                 std::uint64_t seed) {
  if (ns <= 0.0) throw std::invalid_argument("optimize_two: Ns must be > 0");
  if (nbar <= 0.0) throw std::invalid_argument("optimize_two: nbar must be > 0");
  if (cutoff < 3) throw std::invalid_argument("optimize_two: cutoff too small");
  if (cutoff - 1 <= ns) throw std::invalid_argument("optimize_two: cutoff below energy");

  const double w = nbar / (1.0 + nbar);
  std::mt19937_64 rng(seed);

  Eigen::VectorXd best;
  double best_f = -std::numeric_limits<double>::infinity();
  constexpr int kRestarts = 20;
  for (int restart = 0; restart < kRestarts; ++restart) {
    Eigen::VectorXd x;
    if (restart == 0) {
      const int levels = std::min(cutoff, static_cast<int>(std::ceil(4.0 * ns)) + 4);
      Eigen::VectorXd y = Eigen::VectorXd::Zero(cutoff);
      y.head(levels).setConstant(1.0 / levels);
      x = project_feasible(y, ns);
    } else {
      const std::vector<double> r = random_feasible_sq(ns, cutoff, rng);
      x = Eigen::Map<const Eigen::VectorXd>(r.data(), cutoff);
    }

    double f = objective_sq(x, w);
    Eigen::VectorXd g = gradient_sq(x, w);
    double step = 1e-2;
    Eigen::VectorXd x_prev = x, g_prev = g;
    for (int it = 0; it < 20000; ++it) {
      Eigen::VectorXd x_new = project_feasible(x + step * g, ns);
      double f_new = objective_sq(x_new, w);
      int backtracks = 0;
      while (f_new < f - 1e-18 && backtracks < 40) {
        step *= 0.5;
        x_new = project_feasible(x + step * g, ns);
        f_new = objective_sq(x_new, w);
        ++backtracks;
      }
      const double move = (x_new - x).cwiseAbs().maxCoeff();
      x_prev = x;
      g_prev = g;
      x = x_new;
      f = f_new;
      g = gradient_sq(x, w);
      const Eigen::VectorXd dx = x - x_prev;
      const Eigen::VectorXd dg = g - g_prev;
      const double denom = std::abs(dx.dot(dg));
      step = denom > 1e-300 ? std::clamp(std::abs(dx.dot(dx)) / denom, 1e-12, 1e3)
                            : step * 2.0;
      if (move < 1e-15 && it > 10) break;
    }
    if (f > best_f) {
      best_f = f;
      best = x;
    }
  }
  if (!best.size() || !std::isfinite(best_f)) {
    throw std::runtime_error("optimize_two did not converge");
  }
  std::vector<double> coeffs(cutoff);
  for (int n = 0; n < cutoff; ++n) coeffs[n] = std::sqrt(std::max(0.0, best(n)));
  return coeffs;
}

}  // namespace qi
