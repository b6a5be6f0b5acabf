#pragma once

#include <Eigen/Dense>
#include <vector>

namespace qi {

// Phase-space conventions used throughout:
//   - quadrature ordering is interleaved (x1, p1, x2, p2, ...),
//   - a = (x + i p) / 2, so the vacuum covariance is the identity and a
//     coherent state of mean photon number Ns has displacement (2 sqrt(Ns), 0).

/// Standard symplectic form, block-diagonal [[0,1],[-1,0]] per mode.
Eigen::MatrixXd symplectic_form(int n_modes);

struct SymplecticOp {
  Eigen::MatrixXd matrix;
  int modes() const { return static_cast<int>(matrix.rows()) / 2; }
};

/// Gaussian state as displacement vector + covariance matrix.
/// The constructor validates symmetry (1e-12), positivity of sigma + i*Omega
/// (eigenvalues >= -1e-9) and symplectic eigenvalues >= 1 - 1e-9.
struct GaussianState {
  Eigen::VectorXd disp;
  Eigen::MatrixXd cov;

  GaussianState(Eigen::VectorXd d, Eigen::MatrixXd sigma);
  int modes() const { return static_cast<int>(disp.size()) / 2; }
};

GaussianState vacuum_state(int n_modes);
GaussianState thermal_state(double nbar);
GaussianState coherent_state(double ns);
GaussianState tmsv_state(double ns);

/// Beam splitter acting on (mode_a, mode_b): mode_a picks up
/// sqrt(T) of itself plus sqrt(1-T) of mode_b, mode_b the orthogonal
/// combination with a minus sign on its mode_a component.
SymplecticOp beamsplitter_symplectic(double transmissivity, int mode_a, int mode_b,
                                     int n_modes);

GaussianState apply_symplectic(const GaussianState& state, const SymplecticOp& op);

/// Keeps the listed modes, in the given order.
GaussianState partial_trace(const GaussianState& state, const std::vector<int>& keep);

/// Symplectic spectrum of a covariance matrix, ascending, one value per mode.
/// Throws std::domain_error when a value is below 1 - 1e-6 (non-physical) and
/// std::runtime_error when it is merely below the 1 - 1e-9 noise floor.
std::vector<double> symplectic_eigenvalues(const Eigen::MatrixXd& cov);

/// Williamson normal form: cov = S * diag(nu_k I2) * S^T with S symplectic
/// and nu ascending.
struct NormalForm {
  Eigen::MatrixXd S;
  std::vector<double> nu;
};
NormalForm williamson(const Eigen::MatrixXd& cov);

}  // namespace qi
