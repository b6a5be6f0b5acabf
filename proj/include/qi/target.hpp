#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qi/gaussian.hpp"

namespace qi {

/// Absorbing-target channel parameters. The target is built from two
/// auxiliary beam splitters of reflectivity r (the absorption parameter)
/// and one primary beam splitter of reflectivity kappa, sitting in a
/// thermal background of mean photon number nbar. Effective target
/// reflectivity is t*kappa and transmissivity t*tau.
struct TargetParams {
  double absorption = 0.0;  // r
  double kappa = 0.0;
  double nbar = 0.0;

  double t() const { return 1.0 - absorption; }
  double tau() const { return 1.0 - kappa; }

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct CoherentProbe {
  double ns = 0.0;
};
struct TmsvProbe {
  double ns = 0.0;
};
/// General single-mode probe sum_n C_n |n>, real coefficients.
struct FockSingleProbe {
  std::vector<double> coeffs;
};
/// General two-mode probe sum_n C_n |n,n>, real coefficients.
struct FockTwoProbe {
  std::vector<double> coeffs;
};

using ProbeSpec = std::variant<CoherentProbe, TmsvProbe, FockSingleProbe, FockTwoProbe>;

/// Normalization check (sum C_n^2 = 1 within 1e-10) for Fock probes;
/// non-negative signal strength for the Gaussian ones.
void validate_probe(const ProbeSpec& probe);
double probe_mean_photons(const ProbeSpec& probe);

struct HypothesisPair {
  GaussianState rho0;
  GaussianState rho1;
  ProbeSpec probe;
  TargetParams params;
  std::vector<std::string> mode_labels;
};

/// Closed-form hypothesis pair for a coherent probe: rho0 = thermal(nbar),
/// rho1 = displaced thermal with d = (2 sqrt(Ns kappa t), 0) and
/// sigma = (2 nbar tau t + 1) I.
HypothesisPair rho_pair_coherent_closed(const TargetParams& params, double ns);

/// Closed-form pair for a TMSV probe, mode order [return, idler].
HypothesisPair rho_pair_tmsv_closed(const TargetParams& params, double ns);

/// Full multi-mode pipeline: thermal + device vacua + probe, the two
/// auxiliary beam splitters, trace of the device modes, primary beam
/// splitter, trace of the transmitted mode. Returns the detector-side
/// state [return, other probe modes].
GaussianState rho1_pipeline(const GaussianState& probe, int signal_mode,
                            const TargetParams& params);

/// Transmission and absorption matrices of the composite lossy target,
/// T = sqrt(t) U and A = sqrt(r) U with U = [[sqrt(k), sqrt(tau)],
/// [sqrt(tau), -sqrt(k)]].
std::pair<Eigen::Matrix2d, Eigen::Matrix2d> transmission_absorption_matrices(
    const TargetParams& params);

}  // namespace qi
