#include "qi/gaussian.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>
#include <stdexcept>
#include <string>

namespace qi {
namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kPhysicalTol = 1e-9;
constexpr double kHardPhysicalTol = 1e-6;

void check_cov_shape(const Eigen::MatrixXd& cov) {
  if (cov.rows() == 0 || cov.rows() != cov.cols() || cov.rows() % 2 != 0) {
    throw std::invalid_argument("covariance must be square with even dimension");
  }
  const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol) {
    throw std::invalid_argument("covariance not symmetric, max asymmetry " +
                                std::to_string(asym));
  }
}

// Symmetric positive-definite square root. Throws if cov has a
// non-positive eigenvalue (such a matrix cannot be a covariance).
Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition of covariance failed");
  }
  const double floor = -1e-12 * std::max(1.0, es.eigenvalues().maxCoeff());
  if (es.eigenvalues().minCoeff() < floor) {
    throw std::domain_error("covariance is not positive definite");
  }
  Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

// Positive half of the spectrum of i*Omega*cov, ascending. Computed from the
// Hermitian matrix i * sqrt(cov) * Omega * sqrt(cov), which shares it.
std::vector<double> symp_spectrum(const Eigen::MatrixXd& cov) {
  const int n = static_cast<int>(cov.rows()) / 2;
  const Eigen::MatrixXd root = spd_sqrt(cov);
  const Eigen::MatrixXd k = root * symplectic_form(n) * root;
  Eigen::MatrixXcd h = std::complex<double>(0.0, 1.0) * k.cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  std::vector<double> nu(n);
  for (int i = 0; i < n; ++i) nu[i] = es.eigenvalues()(n + i);
  return nu;
}

}  // namespace

Eigen::MatrixXd symplectic_form(int n_modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (int k = 0; k < n_modes; ++k) {
    omega(2 * k, 2 * k + 1) = 1.0;
    omega(2 * k + 1, 2 * k) = -1.0;
  }
  return omega;
}

GaussianState::GaussianState(Eigen::VectorXd d, Eigen::MatrixXd sigma)
    : disp(std::move(d)), cov(std::move(sigma)) {
  check_cov_shape(cov);
  if (disp.size() != cov.rows()) {
    throw std::invalid_argument("displacement/covariance size mismatch");
  }
  const int n = modes();
  Eigen::MatrixXcd h = cov.cast<std::complex<double>>() +
                       std::complex<double>(0.0, 1.0) *
                           symplectic_form(n).cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kPhysicalTol) {
    throw std::domain_error("state not physical: min eig of sigma + i*Omega = " +
                            std::to_string(es.eigenvalues().minCoeff()));
  }
  const std::vector<double> nu = symp_spectrum(cov);
  if (nu.front() < 1.0 - kPhysicalTol) {
    throw std::domain_error("state not physical: symplectic eigenvalue " +
                            std::to_string(nu.front()));
  }
}

GaussianState vacuum_state(int n_modes) {
  if (n_modes < 1) throw std::invalid_argument("vacuum_state: need n_modes >= 1");
  return GaussianState(Eigen::VectorXd::Zero(2 * n_modes),
                       Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes));
}

GaussianState thermal_state(double nbar) {
  if (nbar < 0.0) throw std::invalid_argument("thermal_state: nbar must be >= 0");
  return GaussianState(Eigen::VectorXd::Zero(2),
                       (2.0 * nbar + 1.0) * Eigen::MatrixXd::Identity(2, 2));
}

GaussianState coherent_state(double ns) {
  if (ns < 0.0) throw std::invalid_argument("coherent_state: Ns must be >= 0");
  Eigen::VectorXd d(2);
  d << 2.0 * std::sqrt(ns), 0.0;
  return GaussianState(d, Eigen::MatrixXd::Identity(2, 2));
}

GaussianState tmsv_state(double ns) {
  if (ns < 0.0) throw std::invalid_argument("tmsv_state: Ns must be >= 0");
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(4, 4);
  const double diag = 2.0 * ns + 1.0;
  const double off = 2.0 * std::sqrt(ns * (1.0 + ns));
  cov(0, 0) = cov(1, 1) = cov(2, 2) = cov(3, 3) = diag;
  cov(0, 2) = cov(2, 0) = off;
  cov(1, 3) = cov(3, 1) = -off;
  return GaussianState(Eigen::VectorXd::Zero(4), cov);
}

SymplecticOp beamsplitter_symplectic(double transmissivity, int mode_a, int mode_b,
                                     int n_modes) {
  if (!(transmissivity >= 0.0 && transmissivity <= 1.0)) {
    throw std::invalid_argument("beamsplitter: transmissivity must be in [0,1]");
  }
  if (mode_a == mode_b || mode_a < 0 || mode_b < 0 || mode_a >= n_modes ||
      mode_b >= n_modes) {
    throw std::invalid_argument("beamsplitter: invalid mode pair");
  }
  const double ct = std::sqrt(transmissivity);
  const double st = std::sqrt(1.0 - transmissivity);
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes);
  for (int q = 0; q < 2; ++q) {
    const int ia = 2 * mode_a + q;
    const int ib = 2 * mode_b + q;
    s(ia, ia) = ct;
    s(ia, ib) = st;
    s(ib, ia) = -st;
    s(ib, ib) = ct;
  }
  return SymplecticOp{std::move(s)};
}

GaussianState apply_symplectic(const GaussianState& state, const SymplecticOp& op) {
  if (op.matrix.rows() != state.disp.size()) {
    throw std::invalid_argument("apply_symplectic: dimension mismatch");
  }
  Eigen::MatrixXd cov = op.matrix * state.cov * op.matrix.transpose();
  cov = 0.5 * (cov + cov.transpose());
  return GaussianState(op.matrix * state.disp, std::move(cov));
}

GaussianState partial_trace(const GaussianState& state, const std::vector<int>& keep) {
  if (keep.empty()) throw std::invalid_argument("partial_trace: keep list empty");
  std::set<int> seen;
  for (int m : keep) {
    if (m < 0 || m >= state.modes()) {
      throw std::invalid_argument("partial_trace: mode index out of range");
    }
    if (!seen.insert(m).second) {
      throw std::invalid_argument("partial_trace: duplicate mode index");
    }
  }
  const int nk = static_cast<int>(keep.size());
  Eigen::VectorXd d(2 * nk);
  Eigen::MatrixXd cov(2 * nk, 2 * nk);
  for (int i = 0; i < nk; ++i) {
    d.segment<2>(2 * i) = state.disp.segment<2>(2 * keep[i]);
    for (int j = 0; j < nk; ++j) {
      cov.block<2, 2>(2 * i, 2 * j) = state.cov.block<2, 2>(2 * keep[i], 2 * keep[j]);
    }
  }
  return GaussianState(std::move(d), std::move(cov));
}

std::vector<double> symplectic_eigenvalues(const Eigen::MatrixXd& cov) {
  check_cov_shape(cov);
  std::vector<double> nu = symp_spectrum(cov);
  if (nu.front() < 1.0 - kHardPhysicalTol) {
    throw std::domain_error("non-physical covariance: symplectic eigenvalue " +
                            std::to_string(nu.front()));
  }
  if (nu.front() < 1.0 - kPhysicalTol) {
    throw std::runtime_error(
        "symplectic eigenvalue below 1 beyond numerical noise floor: " +
        std::to_string(nu.front()));
  }
  return nu;
}

NormalForm williamson(const Eigen::MatrixXd& cov) {
  check_cov_shape(cov);
  const int n = static_cast<int>(cov.rows()) / 2;
  const Eigen::MatrixXd root = spd_sqrt(cov);
  const Eigen::MatrixXd k = root * symplectic_form(n) * root;
  Eigen::MatrixXcd h = std::complex<double>(0.0, 1.0) * k.cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("williamson: eigendecomposition failed");
  }

  // For the eigenvector v = u1 + i*u2 of i*K with eigenvalue nu > 0, the pair
  // (sqrt(2) u1, -sqrt(2) u2) spans the corresponding canonical plane, and the
  // collected columns form an orthogonal O with K = O (nu_k J2) O^T.
  NormalForm out;
  out.nu.resize(n);
  Eigen::MatrixXd o(2 * n, 2 * n);
  const double rt2 = std::sqrt(2.0);
  for (int j = 0; j < n; ++j) {
    out.nu[j] = es.eigenvalues()(n + j);
    Eigen::VectorXcd v = es.eigenvectors().col(n + j);
    o.col(2 * j) = rt2 * v.real();
    o.col(2 * j + 1) = -rt2 * v.imag();
  }
  Eigen::VectorXd scale(2 * n);
  for (int j = 0; j < n; ++j) {
    const double inv = 1.0 / std::sqrt(out.nu[j]);
    scale(2 * j) = inv;
    scale(2 * j + 1) = inv;
  }
  out.S = root * o * scale.asDiagonal();
  return out;
}

}  // namespace qi
