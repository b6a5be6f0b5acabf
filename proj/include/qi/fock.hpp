#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qi/chernoff.hpp"
#include "qi/target.hpp"

namespace qi::fock {

// Brute-force truncated-Fock-space model of the same experiment. Everything
// here is kept independent of the Gaussian closed forms; the only shared
// piece is the s-scan driver, so minima are comparable point for point.

/// Truncated density matrix. All states produced by this module are real in
/// the Fock basis, so the matrix is stored as real symmetric.
struct FockDensityMatrix {
  std::vector<int> dims;   // per-mode basis sizes, row-major flattening
  Eigen::MatrixXd matrix;
  double trace_deficit = 0.0;

  int modes() const { return static_cast<int>(dims.size()); }
  int dim() const { return static_cast<int>(matrix.rows()); }
  int cutoff() const;
};

/// Smallest d with (x/(1+x))^d < 1e-10.
int tail_cutoff(double occupancy);

/// Cutoff rule for a scenario: geometric tails of both nbar and Ns below
/// 1e-10, plus 5 levels of headroom for beam-splitter mixing.
int required_cutoff(double nbar, double ns);

FockDensityMatrix thermal_dm(double nbar, int cutoff, double max_deficit = 1e-10);
FockDensityMatrix coherent_dm(double ns, int cutoff, double max_deficit = 1e-10);

/// Two-mode squeezed vacuum amplitudes on the cutoff^2 pair space.
Eigen::VectorXd tmsv_vector(double ns, int cutoff, double max_deficit = 1e-10);
FockDensityMatrix tmsv_dm(double ns, int cutoff, double max_deficit = 1e-10);

/// Annihilation operator on a truncated single-mode space.
Eigen::MatrixXd ladder(int dim);

/// exp(theta (a'b - ab')) restricted to the total-photon-N block; basis index
/// is the photon count of the first mode. Exact within the block.
Eigen::MatrixXd bs_sector(double theta, int total);

/// Beam-splitter unitary on the rectangular truncated pair space dim_a x dim_b,
/// built by exponentiating the truncated generator (orthogonal by
/// construction; blocks with clipped sectors deviate from the untruncated
/// operator only where the basis itself is incomplete).
Eigen::MatrixXd bs_unitary(double theta, int dim_a, int dim_b);

/// Kraus operators of the loss channel: mix with a vacuum ancilla at the
/// given transmissivity and trace the ancilla.
std::vector<Eigen::MatrixXd> loss_kraus(double transmissivity, int dim);

/// Pushes a single- or two-mode probe (signal mode first) through the
/// three-beam-splitter target: auxiliary loss on thermal and signal arms,
/// primary mixing, trace of the transmitted mode. thermal_cutoff sets the
/// thermal input and detector-side dimensions.
FockDensityMatrix channel_rho1(const FockDensityMatrix& probe,
                               const TargetParams& params, int thermal_cutoff);

/// tr(rho0^s rho1^(1-s)) by Hermitian eigendecomposition. Negative
/// eigenvalues are clamped to zero; clamped mass beyond 1e-8 is an error.
/// rho^0 is the support projector.
double s_overlap(const FockDensityMatrix& rho0, const FockDensityMatrix& rho1,
                 double s);

/// Precomputed spectral data so a full s-scan costs one matrix-vector
/// product per sample.
struct OverlapPlan {
  Eigen::VectorXd ev0, ev1;
  Eigen::MatrixXd weight;  // squared eigenbasis overlaps
  double clamped = 0.0;
};
OverlapPlan make_overlap_plan(const FockDensityMatrix& rho0,
                              const FockDensityMatrix& rho1);
double overlap_at(const OverlapPlan& plan, double s);

/// Same grid-plus-refine scan as the Gaussian engine.
ChernoffResult chernoff_oracle(const FockDensityMatrix& rho0,
                               const FockDensityMatrix& rho1);

struct OracleRun {
  ChernoffResult chernoff;
  std::vector<int> dims;     // dimensions of rho1
  double clamped = 0.0;      // clamped negative mass in the spectral plan
  double deficit_rho1 = 0.0;
};

/// End-to-end oracle Chernoff bound for a probe/channel scenario.
/// cutoff_override = 0 picks dimensions by the cutoff rule.
OracleRun oracle_chernoff(const ProbeSpec& probe, const TargetParams& params,
                          int cutoff_override = 0);

}  // namespace qi::fock
