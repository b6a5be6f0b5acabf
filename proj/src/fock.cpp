#include "qi/fock.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qi::fock {
namespace {

constexpr double kTailTarget = 1e-10;
constexpr int kHeadroom = 5;

void check_deficit(double deficit, double max_deficit, const char* what) {
  if (deficit > max_deficit) {
    throw std::invalid_argument(std::string(what) +
                                ": cutoff too small, trace deficit " +
                                std::to_string(deficit));
  }
}

Eigen::VectorXd thermal_weights(double nbar, int cutoff) {
  Eigen::VectorXd lam(cutoff);
  const double w = nbar / (1.0 + nbar);
  double v = 1.0 / (1.0 + nbar);
  for (int m = 0; m < cutoff; ++m) {
    lam(m) = v;
    v *= w;
  }
  return lam;
}

// theta from (cos, sin) = (sqrt(t), sqrt(1-t)) without cancellation at the ends.
double mix_angle(double transmissivity) {
  return std::atan2(std::sqrt(std::max(0.0, 1.0 - transmissivity)),
                    std::sqrt(std::max(0.0, transmissivity)));
}

// Thermal diagonal through the loss channel; stays diagonal because every
// Kraus operator is a single shift stripe.
Eigen::VectorXd lossy_thermal_diag(const Eigen::VectorXd& lam, double transmissivity) {
  const int d = static_cast<int>(lam.size());
  const double theta = mix_angle(transmissivity);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
  for (int p = 0; p < d; ++p) {
    const Eigen::MatrixXd block = bs_sector(theta, p);
    for (int n = 0; n <= p; ++n) {
      mu(n) += block(n, p) * block(n, p) * lam(p);
    }
  }
  return mu;
}

// stripe(n, q, q') = sum_p <n,.|U|p,q> mu_p <m,.|U|p,q'> with m = n + q' - q,
// the thermal arm contracted through the primary beam splitter.
// Indexing: [n][q][q'].
std::vector<Eigen::MatrixXd> primary_stripes(const Eigen::VectorXd& mu, int ds,
                                             int dout, double kappa) {
  const int dt = static_cast<int>(mu.size());
  const double theta = mix_angle(1.0 - kappa);
  const int nmax = dt - 1 + ds - 1;
  std::vector<Eigen::MatrixXd> sector(nmax + 1);
  for (int nn = 0; nn <= nmax; ++nn) sector[nn] = bs_sector(theta, nn);

  std::vector<Eigen::MatrixXd> stripe(dout, Eigen::MatrixXd::Zero(ds, ds));
  for (int n = 0; n < dout; ++n) {
    for (int q = 0; q < ds; ++q) {
      for (int qp = 0; qp < ds; ++qp) {
        const int m = n + qp - q;
        if (m < 0 || m >= dout) continue;
        double acc = 0.0;
        const int plo = std::max(0, n - q);
        for (int p = plo; p < dt; ++p) {
          acc += sector[p + q](n, p) * mu(p) * sector[p + qp](m, p);
        }
        stripe[n](q, qp) = acc;
      }
    }
  }
  return stripe;
}

Eigen::MatrixXd apply_loss_single(const Eigen::MatrixXd& rho, double transmissivity) {
  const int d = static_cast<int>(rho.rows());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (const Eigen::MatrixXd& k : loss_kraus(transmissivity, d)) {
    out.noalias() += k * rho * k.transpose();
  }
  return out;
}

// Loss on the first (signal) factor of a two-mode state.
Eigen::MatrixXd apply_loss_first(const Eigen::MatrixXd& rho, double transmissivity,
                                 int ds, int di) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rho.rows(), rho.cols());
  Eigen::MatrixXd tmp(rho.rows(), rho.cols());
  for (const Eigen::MatrixXd& k : loss_kraus(transmissivity, ds)) {
    tmp.setZero();
    for (int n = 0; n < ds; ++n) {
      for (int p = 0; p < ds; ++p) {
        if (k(n, p) != 0.0) {
          tmp.middleRows(n * di, di) += k(n, p) * rho.middleRows(p * di, di);
        }
      }
    }
    for (int n = 0; n < ds; ++n) {
      for (int p = 0; p < ds; ++p) {
        if (k(n, p) != 0.0) {
          out.middleCols(n * di, di) += k(n, p) * tmp.middleCols(p * di, di);
        }
      }
    }
  }
  return out;
}

bool nearly_diagonal(const Eigen::MatrixXd& m) {
  const double scale = std::max(1e-300, m.diagonal().cwiseAbs().maxCoeff());
  const double off = (m - Eigen::MatrixXd(m.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
  return off < 1e-13 * scale;
}

}  // namespace

int FockDensityMatrix::cutoff() const {
  return *std::max_element(dims.begin(), dims.end());
}

int tail_cutoff(double occupancy) {
  if (occupancy < 0.0) throw std::invalid_argument("occupancy must be >= 0");
  if (occupancy == 0.0) return 1;
  const double w = occupancy / (1.0 + occupancy);
  return static_cast<int>(std::floor(std::log(kTailTarget) / std::log(w))) + 1;
}

int required_cutoff(double nbar, double ns) {
  return std::max(tail_cutoff(nbar), tail_cutoff(ns)) + kHeadroom;
}

FockDensityMatrix thermal_dm(double nbar, int cutoff, double max_deficit) {
  if (nbar < 0.0) throw std::invalid_argument("thermal_dm: nbar must be >= 0");
  if (cutoff < 1) throw std::invalid_argument("thermal_dm: cutoff must be >= 1");
  FockDensityMatrix out;
  out.dims = {cutoff};
  out.matrix = thermal_weights(nbar, cutoff).asDiagonal();
  out.trace_deficit = std::pow(nbar / (1.0 + nbar), cutoff);
  check_deficit(out.trace_deficit, max_deficit, "thermal_dm");
  return out;
}

FockDensityMatrix coherent_dm(double ns, int cutoff, double max_deficit) {
  if (ns < 0.0) throw std::invalid_argument("coherent_dm: Ns must be >= 0");
  if (cutoff < 1) throw std::invalid_argument("coherent_dm: cutoff must be >= 1");
  Eigen::VectorXd amp(cutoff);
  double a = std::exp(-0.5 * ns);
  for (int n = 0; n < cutoff; ++n) {
    amp(n) = a;
    a *= std::sqrt(ns / (n + 1.0));
  }
  FockDensityMatrix out;
  out.dims = {cutoff};
  out.matrix = amp * amp.transpose();
  out.trace_deficit = 1.0 - amp.squaredNorm();
  check_deficit(out.trace_deficit, max_deficit, "coherent_dm");
  return out;
}

Eigen::VectorXd tmsv_vector(double ns, int cutoff, double max_deficit) {
  if (ns < 0.0) throw std::invalid_argument("tmsv_vector: Ns must be >= 0");
  if (cutoff < 1) throw std::invalid_argument("tmsv_vector: cutoff must be >= 1");
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(cutoff * cutoff);
  double c = 1.0 / std::sqrt(1.0 + ns);
  const double ratio = std::sqrt(ns / (1.0 + ns));
  for (int n = 0; n < cutoff; ++n) {
    psi(n * cutoff + n) = c;
    c *= ratio;
  }
  const double deficit = std::pow(ns / (1.0 + ns), cutoff);
  check_deficit(deficit, max_deficit, "tmsv_vector");
  return psi;
}

FockDensityMatrix tmsv_dm(double ns, int cutoff, double max_deficit) {
  const Eigen::VectorXd psi = tmsv_vector(ns, cutoff, max_deficit);
  FockDensityMatrix out;
  out.dims = {cutoff, cutoff};
  out.matrix = psi * psi.transpose();
  out.trace_deficit = 1.0 - psi.squaredNorm();
  return out;
}

Eigen::MatrixXd ladder(int dim) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

Eigen::MatrixXd bs_sector(double theta, int total) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(total + 1, total + 1);
  for (int n = 0; n < total; ++n) {
    const double v = theta * std::sqrt((n + 1.0) * (total - n));
    g(n + 1, n) = v;
    g(n, n + 1) = -v;
  }
  return g.exp();
}

Eigen::MatrixXd bs_unitary(double theta, int dim_a, int dim_b) {
  if (dim_a < 1 || dim_b < 1) throw std::invalid_argument("bs_unitary: bad dimensions");
  const int d = dim_a * dim_b;
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(d, d);
  for (int total = 0; total <= dim_a - 1 + dim_b - 1; ++total) {
    const int lo = std::max(0, total - dim_b + 1);
    const int hi = std::min(total, dim_a - 1);
    const int m = hi - lo + 1;
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i + 1 < m; ++i) {
      const int n = lo + i;
      const double v = theta * std::sqrt((n + 1.0) * (total - n));
      g(i + 1, i) = v;
      g(i, i + 1) = -v;
    }
    const Eigen::MatrixXd block = g.exp();
    for (int i = 0; i < m; ++i) {
      const int row = (lo + i) * dim_b + (total - lo - i);
      for (int j = 0; j < m; ++j) {
        u(row, (lo + j) * dim_b + (total - lo - j)) = block(i, j);
      }
    }
  }
  return u;
}

std::vector<Eigen::MatrixXd> loss_kraus(double transmissivity, int dim) {
  if (!(transmissivity >= 0.0 && transmissivity <= 1.0)) {
    throw std::invalid_argument("loss_kraus: transmissivity must be in [0,1]");
  }
  const double theta = mix_angle(transmissivity);
  std::vector<Eigen::MatrixXd> sector(dim);
  for (int p = 0; p < dim; ++p) sector[p] = bs_sector(theta, p);
  std::vector<Eigen::MatrixXd> kraus(dim, Eigen::MatrixXd::Zero(dim, dim));
  for (int k = 0; k < dim; ++k) {
    for (int p = k; p < dim; ++p) kraus[k](p - k, p) = sector[p](p - k, p);
  }
  return kraus;
}

FockDensityMatrix channel_rho1(const FockDensityMatrix& probe,
                               const TargetParams& params, int thermal_cutoff) {
  params.validate();
  if (thermal_cutoff < 1) throw std::invalid_argument("channel_rho1: bad thermal cutoff");
  if (probe.modes() != 1 && probe.modes() != 2) {
    throw std::invalid_argument("channel_rho1: probe must have one or two modes");
  }

  const int dt = thermal_cutoff;
  const int dout = dt;
  const Eigen::VectorXd lam = thermal_weights(params.nbar, dt);
  const Eigen::VectorXd mu = lossy_thermal_diag(lam, params.t());

  const int ds = probe.dims[0];
  const int di = probe.modes() == 2 ? probe.dims[1] : 1;
  const Eigen::MatrixXd lossy_probe =
      probe.modes() == 2 ? apply_loss_first(probe.matrix, params.t(), ds, di)
                         : apply_loss_single(probe.matrix, params.t());

  const std::vector<Eigen::MatrixXd> stripe =
      primary_stripes(mu, ds, dout, params.kappa);

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dout * di, dout * di);
  for (int n = 0; n < dout; ++n) {
    for (int q = 0; q < ds; ++q) {
      for (int qp = 0; qp < ds; ++qp) {
        const double w = stripe[n](q, qp);
        if (w == 0.0) continue;
        const int m = n + qp - q;
        out.block(n * di, m * di, di, di) +=
            w * lossy_probe.block(q * di, qp * di, di, di);
      }
    }
  }
  out = 0.5 * (out + out.transpose()).eval();

  FockDensityMatrix res;
  res.dims = probe.modes() == 2 ? std::vector<int>{dout, di} : std::vector<int>{dout};
  res.matrix = std::move(out);
  res.trace_deficit = 1.0 - res.matrix.trace();
  return res;
}

OverlapPlan make_overlap_plan(const FockDensityMatrix& rho0,
                              const FockDensityMatrix& rho1) {
  if (rho0.dim() != rho1.dim()) {
    throw std::invalid_argument("overlap: dimension mismatch");
  }
  auto spectral = [](const Eigen::MatrixXd& m, Eigen::VectorXd& ev,
                     Eigen::MatrixXd& vecs, bool& diag) {
    if (nearly_diagonal(m)) {
      ev = m.diagonal();
      diag = true;
      return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success) throw std::runtime_error("overlap: eigensolve failed");
    ev = es.eigenvalues();
    vecs = es.eigenvectors();
    diag = false;
  };

  OverlapPlan plan;
  Eigen::MatrixXd v0, v1;
  bool diag0 = false, diag1 = false;
  spectral(rho0.matrix, plan.ev0, v0, diag0);
  spectral(rho1.matrix, plan.ev1, v1, diag1);

  for (Eigen::VectorXd* ev : {&plan.ev0, &plan.ev1}) {
    for (int i = 0; i < ev->size(); ++i) {
      if ((*ev)(i) < 0.0) {
        plan.clamped += -(*ev)(i);
        (*ev)(i) = 0.0;
      }
    }
  }
  if (plan.clamped > 1e-8) {
    throw std::runtime_error("overlap: clamped negative mass " +
                             std::to_string(plan.clamped));
  }

  if (diag0 && diag1) {
    plan.weight = Eigen::MatrixXd::Identity(rho0.dim(), rho0.dim());
  } else if (diag0) {
    plan.weight = v1.cwiseAbs2();
  } else if (diag1) {
    plan.weight = v0.transpose().cwiseAbs2();
  } else {
    plan.weight = (v0.transpose() * v1).cwiseAbs2();
  }
  return plan;
}

double overlap_at(const OverlapPlan& plan, double s) {
  const int d = static_cast<int>(plan.ev0.size());
  auto powers = [d](const Eigen::VectorXd& ev, double p) {
    Eigen::VectorXd out(d);
    if (p <= 0.0) {
      const double tol = 1e-12 * std::max(1e-300, ev.maxCoeff());
      for (int i = 0; i < d; ++i) out(i) = ev(i) > tol ? 1.0 : 0.0;
    } else if (p >= 1.0) {
      out = ev;
    } else {
      for (int i = 0; i < d; ++i) out(i) = std::pow(ev(i), p);
    }
    return out;
  };
  const Eigen::VectorXd u = powers(plan.ev0, s);
  const Eigen::VectorXd v = powers(plan.ev1, 1.0 - s);
  return u.dot(plan.weight * v);
}

double s_overlap(const FockDensityMatrix& rho0, const FockDensityMatrix& rho1,
                 double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("s must lie in [0,1]");
  return overlap_at(make_overlap_plan(rho0, rho1), s);
}

ChernoffResult chernoff_oracle(const FockDensityMatrix& rho0,
                               const FockDensityMatrix& rho1) {
  const OverlapPlan plan = make_overlap_plan(rho0, rho1);
  return minimize_s([&](double s) { return overlap_at(plan, s); });
}

OracleRun oracle_chernoff(const ProbeSpec& probe, const TargetParams& params,
                          int cutoff_override) {
  params.validate();
  validate_probe(probe);
  const double ns = probe_mean_photons(probe);
  const int dt = cutoff_override > 0 ? cutoff_override : required_cutoff(params.nbar, ns);
  const int dp = cutoff_override > 0 ? cutoff_override : tail_cutoff(ns) + kHeadroom;

  FockDensityMatrix probe_dm;
  if (const auto* c = std::get_if<CoherentProbe>(&probe)) {
    probe_dm = coherent_dm(c->ns, dp);
  } else if (const auto* t = std::get_if<TmsvProbe>(&probe)) {
    probe_dm = tmsv_dm(t->ns, dp);
  } else if (const auto* f1 = std::get_if<FockSingleProbe>(&probe)) {
    const int d = std::max<int>(dp, static_cast<int>(f1->coeffs.size()));
    Eigen::VectorXd amp = Eigen::VectorXd::Zero(d);
    for (std::size_t n = 0; n < f1->coeffs.size(); ++n) amp(n) = f1->coeffs[n];
    probe_dm.dims = {d};
    probe_dm.matrix = amp * amp.transpose();
  } else {
    const auto& f2 = std::get<FockTwoProbe>(probe);
    const int d = std::max<int>(dp, static_cast<int>(f2.coeffs.size()));
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(d * d);
    for (std::size_t n = 0; n < f2.coeffs.size(); ++n) psi(n * d + n) = f2.coeffs[n];
    probe_dm.dims = {d, d};
    probe_dm.matrix = psi * psi.transpose();
  }

  FockDensityMatrix rho1 = channel_rho1(probe_dm, params, dt);

  FockDensityMatrix rho0;
  if (probe_dm.modes() == 1) {
    rho0 = thermal_dm(params.nbar, dt);
  } else {
    // Idler marginal taken from the probe itself.
    const int d2 = probe_dm.dims[1];
    Eigen::MatrixXd idler = Eigen::MatrixXd::Zero(d2, d2);
    for (int p = 0; p < probe_dm.dims[0]; ++p) {
      idler += probe_dm.matrix.block(p * d2, p * d2, d2, d2);
    }
    const Eigen::MatrixXd th = thermal_dm(params.nbar, dt).matrix;
    rho0.dims = {dt, d2};
    rho0.matrix = Eigen::MatrixXd::Zero(dt * d2, dt * d2);
    for (int a = 0; a < dt; ++a) {
      for (int b = 0; b < dt; ++b) {
        if (th(a, b) != 0.0) {
          rho0.matrix.block(a * d2, b * d2, d2, d2) = th(a, b) * idler;
        }
      }
    }
    rho0.trace_deficit = 1.0 - rho0.matrix.trace();
  }

  const OverlapPlan plan = make_overlap_plan(rho0, rho1);
  OracleRun run;
  run.chernoff = minimize_s([&](double s) { return overlap_at(plan, s); });
  run.dims = rho1.dims;
  run.clamped = plan.clamped;
  run.deficit_rho1 = rho1.trace_deficit;
  return run;
}

}  // namespace qi::fock
