#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "geots/statespace.hpp"

namespace geots {

void initialize_structural_state(StructuralModel& model, const MatrixXd& obs,
                                 const MaskMatrix& mask) {
  if (obs.cols() != 1)
    throw std::invalid_argument("initialize_structural_state: expects one channel");
  const int T = static_cast<int>(obs.rows());
  int first = -1, last = -1;
  double sum = 0.0, sum2 = 0.0;
  int n_obs = 0;
  for (int t = 0; t < T; ++t) {
    if (!mask(t, 0)) continue;
    if (first < 0) first = t;
    last = t;
    sum += obs(t, 0);
    sum2 += obs(t, 0) * obs(t, 0);
    ++n_obs;
  }
  if (n_obs < 2)
    throw std::invalid_argument("initialize_structural_state: need >= 2 observed points");

  const double mean = sum / n_obs;
  const double var = std::max(sum2 / n_obs - mean * mean, 1e-12);
  const double span = std::max(1.0, (last - first) * model.dt);
  const double slope = (obs(last, 0) - obs(first, 0)) / span;

  StateSpaceModel& ssm = model.ssm;
  const int n = ssm.state_dim();
  ssm.x0 = VectorXd::Zero(n);
  ssm.P0 = MatrixXd::Zero(n, n);
  int at = 0;
  if (model.components.local_linear_trend) {
    ssm.x0(0) = obs(first, 0);
    ssm.x0(1) = slope;
    ssm.P0(0, 0) = 4.0 * var;
    ssm.P0(1, 1) = std::max(4.0 * slope * slope, 4.0 * var / (span * span));
    at = 2;
  }
  for (; at < n; ++at) ssm.P0(at, at) = 4.0 * var;
}

EmResult fit_em(StructuralModel& model, const MatrixXd& obs,
                const MaskMatrix& mask, const EmOptions& options) {
  if (model.ssm.obs_dim() != 1 || obs.cols() != 1)
    throw std::invalid_argument("fit_em: structural EM operates on one channel");
  const int T = static_cast<int>(obs.rows());
  if (T < 2) throw std::invalid_argument("fit_em: series too short");

  EmResult result;
  double prev_ll = -std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    StateSpaceModel& ssm = model.ssm;
    const FilterResult fwd = kalman_forward(ssm, obs, mask);
    const SmootherResult smo = rts_smooth(ssm, fwd);

    result.log_likelihood.push_back(fwd.log_likelihood);
    result.iterations = iter + 1;
    if (fwd.log_likelihood - prev_ll < options.tolerance && iter > 0) break;
    prev_ll = fwd.log_likelihood;

    const int n = ssm.state_dim();

    // extend the smoother one step before the data to cover the prior state
    Eigen::LDLT<MatrixXd> ldlt(fwd.pred_cov[0]);
    const MatrixXd J_prior =
        ldlt.solve(ssm.F * ssm.P0.transpose()).transpose();
    const VectorXd prior_mean =
        ssm.x0 + J_prior * (smo.mean[0] - fwd.pred_mean[0]);
    const MatrixXd prior_cov =
        ssm.P0 + J_prior * (smo.cov[0] - fwd.pred_cov[0]) * J_prior.transpose();
    const MatrixXd prior_cross = smo.cov[0] * J_prior.transpose();

    if (options.update_noise) {
      MatrixXd S11 = MatrixXd::Zero(n, n);
      MatrixXd S10 = MatrixXd::Zero(n, n);
      MatrixXd S00 = MatrixXd::Zero(n, n);
      for (int t = 0; t < T; ++t) {
        const VectorXd& xt = smo.mean[t];
        const VectorXd& xp = t == 0 ? prior_mean : smo.mean[t - 1];
        const MatrixXd& Pt = smo.cov[t];
        const MatrixXd& Pp = t == 0 ? prior_cov : smo.cov[t - 1];
        const MatrixXd& Ct = t == 0 ? prior_cross : smo.lag_one_cov[t];
        S11 += Pt + xt * xt.transpose();
        S10 += Ct + xt * xp.transpose();
        S00 += Pp + xp * xp.transpose();
      }
      const MatrixXd Q_full =
          (S11 - S10 * ssm.F.transpose() - ssm.F * S10.transpose() +
           ssm.F * S00 * ssm.F.transpose()) /
          static_cast<double>(T);

      int at = 0;
      if (model.components.local_linear_trend) {
        model.noise.sigma_trend = std::sqrt(std::max(Q_full(1, 1), 0.0));
        at = 2;
      }
      if (at < n) {
        double acc = 0.0;
        for (int j = at; j < n; ++j) acc += std::max(Q_full(j, j), 0.0);
        model.noise.sigma_seasonal = std::sqrt(acc / (n - at));
      }

      double r_acc = 0.0;
      int n_obs = 0;
      for (int t = 0; t < T; ++t) {
        if (!mask(t, 0)) continue;
        const double resid = obs(t, 0) - (ssm.H * smo.mean[t])(0);
        r_acc += resid * resid + (ssm.H * smo.cov[t] * ssm.H.transpose())(0, 0);
        ++n_obs;
      }
      if (n_obs > 0)
        model.noise.sigma_obs = std::sqrt(std::max(r_acc / n_obs, 1e-12));

      // rebuild Q and R with the fresh sigmas, keeping F/H/prior
      StructuralModel fresh =
          build_structural_model(model.components, model.noise, model.dt);
      ssm.Q = fresh.ssm.Q;
      ssm.R = fresh.ssm.R;
    }
    if (options.update_x0) ssm.x0 = prior_mean;
  }
  return result;
}

}  // namespace geots
