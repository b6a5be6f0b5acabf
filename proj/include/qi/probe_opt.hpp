#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "qi/target.hpp"

namespace qi {

// Perturbative Chernoff bound for weakly reflecting, weakly absorbing
// targets: q = 1 - xi with xi = term_reflect + term_absorb. The reflect term
// is first order in kappa and carries all probe dependence; the absorb term
// is second order in r and depends only on the background.
struct PerturbativeBound {
  double xi = 0.0;
  double q_perturbative = 1.0;
  double term_reflect = 0.0;
  double term_absorb = 0.0;
  double series_tail = 0.0;  // magnitude of the last included thermal term
};

/// zeta = sum_n C_n C_{n+1} sqrt(n+1); coefficients must be normalized.
double zeta(const std::vector<double>& coeffs);

PerturbativeBound xi_single(const std::vector<double>& coeffs,
                            const TargetParams& params);

/// Two-mode version; requires nbar > 0.
PerturbativeBound xi_two(const std::vector<double>& coeffs,
                         const TargetParams& params);

/// First-order-in-kappa objective of the two-mode bound (the probe-dependent
/// part of xi_two), evaluated on squared coefficients.
double two_mode_reflect_term(const std::vector<double>& coeffs_sq,
                             const TargetParams& params);

std::vector<double> poisson_coeffs(double ns, int cutoff);
std::vector<double> geometric_coeffs(double ns, int cutoff);

/// Maximizes zeta over normalized real coefficient vectors with mean photon
/// number ns. Solved as a one-parameter family of symmetric tridiagonal
/// eigenproblems with the energy multiplier tuned by bisection.
std::vector<double> optimize_single(double ns, int cutoff);

/// Maximizes the two-mode reflect term under the same constraints, by
/// projected gradient ascent in the squared-coefficient simplex with
/// Barzilai-Borwein steps and seeded restarts. Returns amplitudes.
std::vector<double> optimize_two(double ns, double nbar, int cutoff,
                                 std::uint64_t seed = 20240901ULL);

/// Residual of the stationarity relation
/// C_{n+1} sqrt(n+1) + C_{n-1} sqrt(n) + 2 C_n (mu1 + n mu2) = 0, sup norm.
double single_stationarity_residual(const std::vector<double>& coeffs, double mu1,
                                    double mu2);

/// Random squared-coefficient vector on the feasibility set
/// {x >= 0, sum x = 1, sum n x = ns}; used for argmax certification.
std::vector<double> random_feasible_sq(double ns, int cutoff, std::mt19937_64& rng);

}  // namespace qi
