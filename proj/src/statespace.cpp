#include "geots/statespace.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "geots/stats.hpp"

namespace geots {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

void require_symmetric_psd(const MatrixXd& m, const std::string& name,
                           bool strict) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("StateSpaceModel: " + name + " is not square");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, m.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("StateSpaceModel: " + name + " is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const double min_ev = es.eigenvalues().minCoeff();
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (strict ? (min_ev <= 0.0) : (min_ev < -1e-10 * scale))
    throw std::invalid_argument("StateSpaceModel: " + name +
                                (strict ? " is not positive definite" : " is not positive semidefinite"));
}

MatrixXd symmetrize(const MatrixXd& p) { return 0.5 * (p + p.transpose()); }

}  // namespace

void StateSpaceModel::validate() const {
  const auto n = F.rows();
  const auto d = H.rows();
  if (F.cols() != n) throw std::invalid_argument("StateSpaceModel: F not square");
  if (H.cols() != n) throw std::invalid_argument("StateSpaceModel: H column count != state dim");
  if (Q.rows() != n || Q.cols() != n) throw std::invalid_argument("StateSpaceModel: Q shape mismatch");
  if (R.rows() != d || R.cols() != d) throw std::invalid_argument("StateSpaceModel: R shape mismatch");
  if (x0.size() != n) throw std::invalid_argument("StateSpaceModel: x0 size mismatch");
  if (P0.rows() != n || P0.cols() != n) throw std::invalid_argument("StateSpaceModel: P0 shape mismatch");
  require_symmetric_psd(Q, "Q", false);
  require_symmetric_psd(P0, "P0", false);
  require_symmetric_psd(R, "R", true);
}

StructuralModel build_structural_model(const StructuralComponents& components,
                                       const StructuralNoise& noise,
                                       double dt) {
  if (!components.local_linear_trend && components.harmonic_periods.empty())
    throw std::invalid_argument("build_structural_model: need at least one component");
  if (noise.sigma_trend < 0.0 || noise.sigma_seasonal < 0.0)
    throw std::invalid_argument("build_structural_model: process sigmas must be >= 0");
  if (noise.sigma_obs <= 0.0)
    throw std::invalid_argument("build_structural_model: sigma_obs must be > 0");
  if (dt <= 0.0) throw std::invalid_argument("build_structural_model: dt must be > 0");
  for (double p : components.harmonic_periods)
    if (p <= 0.0)
      throw std::invalid_argument("build_structural_model: harmonic period must be > 0");

  const int n_harm = static_cast<int>(components.harmonic_periods.size());
  const int n = (components.local_linear_trend ? 2 : 0) + 2 * n_harm;

  StateSpaceModel m;
  m.F = MatrixXd::Zero(n, n);
  m.Q = MatrixXd::Zero(n, n);
  m.H = MatrixXd::Zero(1, n);
  m.x0 = VectorXd::Zero(n);
  m.P0 = MatrixXd::Identity(n, n) * 1e8;
  m.R = MatrixXd::Constant(1, 1, noise.sigma_obs * noise.sigma_obs);

  int at = 0;
  if (components.local_linear_trend) {
    m.F(0, 0) = 1.0;
    m.F(0, 1) = dt;
    m.F(1, 1) = 1.0;
    m.Q(1, 1) = noise.sigma_trend * noise.sigma_trend;  // noise enters the slope
    m.H(0, 0) = 1.0;
    at = 2;
  }
  for (int h = 0; h < n_harm; ++h) {
    const double theta = kTwoPi * dt / components.harmonic_periods[h];
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    m.F(at, at) = c;
    m.F(at, at + 1) = -s;
    m.F(at + 1, at) = s;
    m.F(at + 1, at + 1) = c;
    m.Q(at, at) = noise.sigma_seasonal * noise.sigma_seasonal;
    m.Q(at + 1, at + 1) = noise.sigma_seasonal * noise.sigma_seasonal;
    m.H(0, at) = 1.0;  // cosine state carries the observable harmonic
    at += 2;
  }
  m.validate();
  return StructuralModel{std::move(m), components, noise, dt};
}

FilterResult kalman_forward(const StateSpaceModel& model, const MatrixXd& obs,
                            const MaskMatrix& mask,
                            const std::vector<double>& epochs) {
  model.validate();
  const int T = static_cast<int>(obs.rows());
  const int d = model.obs_dim();
  const int n = model.state_dim();
  if (obs.cols() != d || mask.rows() != obs.rows() || mask.cols() != obs.cols())
    throw std::invalid_argument("kalman_forward: observation/mask shape mismatch");
  if (!epochs.empty()) {
    if (static_cast<int>(epochs.size()) != T)
      throw std::invalid_argument("kalman_forward: epoch count mismatch");
    for (std::size_t i = 2; i < epochs.size(); ++i) {
      const double d0 = epochs[1] - epochs[0];
      const double di = epochs[i] - epochs[i - 1];
      if (std::abs(di - d0) > 1e-6 * std::max(std::abs(d0), 1.0)) {
        std::ostringstream os;
        os << "kalman_forward: non-uniform epoch spacing at index " << i
           << " (gap " << di << " vs " << d0 << "); represent gaps with the mask";
        throw std::invalid_argument(os.str());
      }
    }
  }

  FilterResult out;
  out.pred_mean.reserve(T);
  out.pred_cov.reserve(T);
  out.filt_mean.reserve(T);
  out.filt_cov.reserve(T);
  out.any_observed.reserve(T);

  const MatrixXd I = MatrixXd::Identity(n, n);
  VectorXd x = model.x0;
  MatrixXd P = model.P0;

  for (int t = 0; t < T; ++t) {
    // predict
    VectorXd xp = model.F * x;
    MatrixXd Pp = symmetrize(model.F * P * model.F.transpose() + model.Q);
    out.pred_mean.push_back(xp);
    out.pred_cov.push_back(Pp);

    // collect observed rows
    std::vector<int> rows;
    for (int j = 0; j < d; ++j)
      if (mask(t, j)) rows.push_back(j);

    if (rows.empty()) {
      x = xp;
      P = Pp;
      out.any_observed.push_back(false);
    } else {
      const int k = static_cast<int>(rows.size());
      MatrixXd Ht(k, n);
      MatrixXd Rt(k, k);
      VectorXd zt(k);
      for (int a = 0; a < k; ++a) {
        Ht.row(a) = model.H.row(rows[a]);
        zt(a) = obs(t, rows[a]);
        for (int b = 0; b < k; ++b) Rt(a, b) = model.R(rows[a], rows[b]);
      }
      const VectorXd innovation = zt - Ht * xp;
      const MatrixXd S = symmetrize(Ht * Pp * Ht.transpose() + Rt);
      Eigen::LLT<MatrixXd> llt(S);
      if (llt.info() != Eigen::Success) {
        std::ostringstream os;
        os << "kalman_forward: innovation covariance not positive definite at step " << t;
        throw std::runtime_error(os.str());
      }
      const MatrixXd K = Pp * Ht.transpose() * llt.solve(MatrixXd::Identity(k, k));
      x = xp + K * innovation;
      const MatrixXd A = I - K * Ht;
      P = symmetrize(A * Pp * A.transpose() + K * Rt * K.transpose());

      double logdet = 0.0;
      for (int a = 0; a < k; ++a) logdet += 2.0 * std::log(llt.matrixL()(a, a));
      out.log_likelihood += -0.5 * (k * std::log(kTwoPi) + logdet +
                                    innovation.dot(llt.solve(innovation)));
      out.any_observed.push_back(true);
    }
    out.filt_mean.push_back(x);
    out.filt_cov.push_back(P);
  }
  return out;
}

FilterResult kalman_forward(const StateSpaceModel& model, const TimeSeries& series,
                            int channel) {
  if (channel < 0 || channel >= series.channel_count())
    throw std::out_of_range("kalman_forward: channel out of range");
  return kalman_forward(model, series.values().col(channel),
                        series.mask().col(channel), series.epochs());
}

SmootherResult rts_smooth(const StateSpaceModel& model, const FilterResult& fwd) {
  const int T = fwd.length();
  if (T == 0) throw std::invalid_argument("rts_smooth: empty filter result");
  const int n = model.state_dim();

  SmootherResult out;
  out.mean.assign(T, VectorXd());
  out.cov.assign(T, MatrixXd());
  out.gain.assign(T, MatrixXd());
  out.lag_one_cov.assign(T, MatrixXd());

  out.mean[T - 1] = fwd.filt_mean[T - 1];
  out.cov[T - 1] = fwd.filt_cov[T - 1];

  for (int t = T - 2; t >= 0; --t) {
    const MatrixXd& Pp_next = fwd.pred_cov[t + 1];
    Eigen::LDLT<MatrixXd> ldlt(Pp_next);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      std::ostringstream os;
      os << "rts_smooth: singular predicted covariance at step " << t + 1;
      throw std::runtime_error(os.str());
    }
    // J_t = P_t^f F' (P_{t+1}^pred)^-1, via solve on the transposed system
    const MatrixXd J =
        ldlt.solve(model.F * fwd.filt_cov[t].transpose()).transpose();
    out.gain[t] = J;
    out.mean[t] = fwd.filt_mean[t] + J * (out.mean[t + 1] - fwd.pred_mean[t + 1]);
    out.cov[t] = symmetrize(fwd.filt_cov[t] +
                            J * (out.cov[t + 1] - Pp_next) * J.transpose());
    // Cov(x_{t+1}, x_t | all data) = P_{t+1}^s J_t'
    out.lag_one_cov[t + 1] = out.cov[t + 1] * J.transpose();
  }
  out.lag_one_cov[0] = MatrixXd::Zero(n, n);  // prior transition handled by EM
  return out;
}

InverseEstimate inverse_propagate(const StateSpaceModel& model,
                                  const VectorXd& terminal_mean,
                                  const MatrixXd& terminal_cov, int steps,
                                  const InverseOptions& options) {
  if (steps < 0) throw std::invalid_argument("inverse_propagate: negative step count");
  const int n = model.state_dim();
  if (terminal_mean.size() != n || terminal_cov.rows() != n || terminal_cov.cols() != n)
    throw std::invalid_argument("inverse_propagate: terminal state dimension mismatch");

  MatrixXd F = model.F;
  Eigen::JacobiSVD<MatrixXd> svd(F);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (cond > options.condition_threshold) {
    if (!options.tikhonov) {
      std::ostringstream os;
      os << "inverse_propagate: F is numerically singular (condition " << cond
         << " > " << options.condition_threshold
         << "); enable Tikhonov regularization (F + eps*I) to proceed";
      throw std::runtime_error(os.str());
    }
    F += options.tikhonov_eps * MatrixXd::Identity(n, n);
  }
  const MatrixXd Finv = F.inverse();

  InverseEstimate out;
  out.noise_cov = symmetrize(Finv * model.Q * Finv.transpose());
  out.mean.reserve(steps + 1);
  out.cov.reserve(steps + 1);
  out.mean.push_back(terminal_mean);
  out.cov.push_back(terminal_cov);
  for (int k = 0; k < steps; ++k) {
    out.mean.push_back(Finv * out.mean.back());
    out.cov.push_back(symmetrize(Finv * (out.cov.back() + model.Q) * Finv.transpose()));
  }
  return out;
}

GateResult consistency_gate(const VectorXd& candidate, const VectorXd& prediction,
                            const MatrixXd& S, double alpha) {
  if (candidate.size() != prediction.size() || S.rows() != candidate.size() ||
      S.cols() != candidate.size())
    throw std::invalid_argument("consistency_gate: dimension mismatch");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("consistency_gate: alpha must lie in (0,1)");
  Eigen::LLT<MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("consistency_gate: S is not positive definite");
  const VectorXd r = candidate - prediction;
  GateResult g;
  g.distance2 = r.dot(llt.solve(r));
  g.threshold = chi_square_quantile(static_cast<int>(candidate.size()), alpha);
  g.accepted = g.distance2 <= g.threshold;
  return g;
}

void write_smoother_csv(const SmootherResult& smoother,
                        const StateSpaceModel& model,
                        const std::vector<double>& epochs,
                        const std::string& path) {
  if (static_cast<int>(epochs.size()) != smoother.length())
    throw std::invalid_argument("write_smoother_csv: epoch count mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_smoother_csv: cannot open " + path);
  out << "epoch,mean,std\n";
  char buf[40];
  for (int t = 0; t < smoother.length(); ++t) {
    const double mean = (model.H * smoother.mean[t])(0);
    const double var = (model.H * smoother.cov[t] * model.H.transpose())(0, 0);
    std::snprintf(buf, sizeof(buf), "%.17g", epochs[t]);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", mean);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", std::sqrt(std::max(0.0, var)));
    out << buf << '\n';
  }
}

}  // namespace geots
