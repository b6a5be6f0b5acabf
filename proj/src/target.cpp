#include "qi/target.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qi {

void TargetParams::validate() const {
  if (!(absorption >= 0.0 && absorption <= 1.0)) {
    throw std::invalid_argument("absorption r must be in [0,1]");
  }
  if (!(kappa >= 0.0 && kappa <= 1.0)) {
    throw std::invalid_argument("kappa must be in [0,1]");
  }
  if (!(nbar >= 0.0)) {
    throw std::invalid_argument("nbar must be >= 0");
  }
}

void validate_probe(const ProbeSpec& probe) {
  auto check_coeffs = [](const std::vector<double>& c) {
    if (c.empty()) throw std::invalid_argument("probe coefficient list empty");
    double norm = 0.0;
    for (double v : c) {
      if (!std::isfinite(v)) throw std::invalid_argument("probe coefficient not finite");
      norm += v * v;
    }
    if (std::abs(norm - 1.0) > 1e-10) {
      throw std::invalid_argument("probe coefficients not normalized, sum C_n^2 = " +
                                  std::to_string(norm));
    }
  };
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, CoherentProbe> || std::is_same_v<T, TmsvProbe>) {
          if (p.ns < 0.0) throw std::invalid_argument("probe Ns must be >= 0");
        } else {
          check_coeffs(p.coeffs);
        }
      },
      probe);
}

double probe_mean_photons(const ProbeSpec& probe) {
  return std::visit(
      [](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, CoherentProbe> || std::is_same_v<T, TmsvProbe>) {
          return p.ns;
        } else {
          double e = 0.0;
          for (std::size_t n = 0; n < p.coeffs.size(); ++n) {
            e += static_cast<double>(n) * p.coeffs[n] * p.coeffs[n];
          }
          return e;
        }
      },
      probe);
}

HypothesisPair rho_pair_coherent_closed(const TargetParams& params, double ns) {
  params.validate();
  if (ns < 0.0) throw std::invalid_argument("Ns must be >= 0");
  GaussianState rho0 = thermal_state(params.nbar);
  Eigen::VectorXd d(2);
  d << 2.0 * std::sqrt(ns * params.kappa * params.t()), 0.0;
  Eigen::MatrixXd cov =
      (2.0 * params.nbar * params.tau() * params.t() + 1.0) * Eigen::MatrixXd::Identity(2, 2);
  GaussianState rho1(d, cov);
  return HypothesisPair{std::move(rho0), std::move(rho1), CoherentProbe{ns}, params,
                        {"return"}};
}

HypothesisPair rho_pair_tmsv_closed(const TargetParams& params, double ns) {
  params.validate();
  if (ns < 0.0) throw std::invalid_argument("Ns must be >= 0");
  const double s = 2.0 * ns + 1.0;
  const double b0 = 2.0 * params.nbar + 1.0;
  const double b = 2.0 * params.nbar * params.t() * params.tau() + 1.0;
  const double a = 2.0 * params.kappa * ns * params.t() + b;
  const double cq = 2.0 * std::sqrt(params.t() * ns * (ns + 1.0));
  const double off = std::sqrt(params.kappa) * cq;

  Eigen::MatrixXd cov0 = Eigen::MatrixXd::Zero(4, 4);
  cov0.diagonal() << b0, b0, s, s;
  GaussianState rho0(Eigen::VectorXd::Zero(4), cov0);

  Eigen::MatrixXd cov1 = Eigen::MatrixXd::Zero(4, 4);
  cov1.diagonal() << a, a, s, s;
  cov1(0, 2) = cov1(2, 0) = off;
  cov1(1, 3) = cov1(3, 1) = -off;
  GaussianState rho1(Eigen::VectorXd::Zero(4), cov1);

  return HypothesisPair{std::move(rho0), std::move(rho1), TmsvProbe{ns}, params,
                        {"return", "idler"}};
}

GaussianState rho1_pipeline(const GaussianState& probe, int signal_mode,
                            const TargetParams& params) {
  params.validate();
  const int np = probe.modes();
  if (signal_mode < 0 || signal_mode >= np) {
    throw std::invalid_argument("signal_mode out of range");
  }

  // Mode order: thermal, device1, device2, probe modes.
  const int n = 3 + np;
  Eigen::VectorXd d = Eigen::VectorXd::Zero(2 * n);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(2 * n, 2 * n);
  cov(0, 0) = cov(1, 1) = 2.0 * params.nbar + 1.0;
  d.segment(6, 2 * np) = probe.disp;
  cov.block(6, 6, 2 * np, 2 * np) = probe.cov;
  GaussianState state(std::move(d), std::move(cov));

  // Auxiliary stage: thermal mixes with device1, signal with device2.
  const int gsig = 3 + signal_mode;
  const Eigen::MatrixXd sa = beamsplitter_symplectic(params.t(), 0, 1, n).matrix *
                             beamsplitter_symplectic(params.t(), gsig, 2, n).matrix;
  state = apply_symplectic(state, SymplecticOp{sa});

  std::vector<int> keep{0};
  for (int m = 3; m < n; ++m) keep.push_back(m);
  state = partial_trace(state, keep);

  // Primary beam splitter on (thermal', signal'); the first output carries
  // sqrt(kappa) of the signal and goes to the detector.
  state = apply_symplectic(
      state, beamsplitter_symplectic(params.tau(), 0, 1 + signal_mode, 1 + np));

  std::vector<int> detector{0};
  for (int m = 0; m < np; ++m) {
    if (m != signal_mode) detector.push_back(1 + m);
  }
  return partial_trace(state, detector);
}

std::pair<Eigen::Matrix2d, Eigen::Matrix2d> transmission_absorption_matrices(
    const TargetParams& params) {
  params.validate();
  Eigen::Matrix2d u;
  const double sk = std::sqrt(params.kappa);
  const double stau = std::sqrt(params.tau());
  u << sk, stau, stau, -sk;
  return {std::sqrt(params.t()) * u, std::sqrt(params.absorption) * u};
}

}  // namespace qi
