#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "geots/timeseries.hpp"

namespace geots {

/// Linear-Gaussian state-space model
///   x_t = F x_{t-1} + w_t,  w_t ~ N(0, Q)
///   z_t = H x_t + v_t,      v_t ~ N(0, R)
/// with prior x_0 ~ N(x0, P0) one step before the first observation.
struct StateSpaceModel {
  MatrixXd F;
  MatrixXd H;
  MatrixXd Q;
  MatrixXd R;
  VectorXd x0;
  MatrixXd P0;

  int state_dim() const { return static_cast<int>(F.rows()); }
  int obs_dim() const { return static_cast<int>(H.rows()); }
  void validate() const;
};

struct StructuralComponents {
  bool local_linear_trend = true;
  std::vector<double> harmonic_periods;  // days; defaults applied by config
};

struct StructuralNoise {
  double sigma_trend = 1e-3;     // slope random-walk std
  double sigma_seasonal = 1e-3;  // harmonic state std
  double sigma_obs = 1.0;        // observation std, must be > 0
};

/// Structural model bundle: the concrete matrices plus the parametrization
/// they were built from (needed for constrained EM updates).
struct StructuralModel {
  StateSpaceModel ssm;
  StructuralComponents components;
  StructuralNoise noise;
  double dt = 1.0;
};

/// Block-diagonal structural form: local linear trend [[1,dt],[0,1]] with
/// process noise on the slope, one 2x2 rotation block per harmonic period,
/// H reading level plus each harmonic cosine state.
StructuralModel build_structural_model(const StructuralComponents& components,
                                       const StructuralNoise& noise,
                                       double dt = 1.0);

struct FilterResult {
  std::vector<VectorXd> pred_mean;
  std::vector<MatrixXd> pred_cov;
  std::vector<VectorXd> filt_mean;
  std::vector<MatrixXd> filt_cov;
  std::vector<bool> any_observed;
  double log_likelihood = 0.0;
  int length() const { return static_cast<int>(filt_mean.size()); }
};

/// Forward Kalman pass over a T x d observation matrix with per-entry mask.
/// Fully missing steps skip the update; partially missing steps row-delete
/// H and R. Joseph-form covariance updates. Requires uniform epoch spacing
/// (pass the epochs to enforce; empty epochs skips the check).
FilterResult kalman_forward(const StateSpaceModel& model, const MatrixXd& obs,
                            const MaskMatrix& mask,
                            const std::vector<double>& epochs = {});

/// Convenience wrapper for one channel of a TimeSeries.
FilterResult kalman_forward(const StateSpaceModel& model, const TimeSeries& series,
                            int channel = 0);

struct SmootherResult {
  std::vector<VectorXd> mean;
  std::vector<MatrixXd> cov;
  std::vector<MatrixXd> gain;         // J_t, empty at the last step
  std::vector<MatrixXd> lag_one_cov;  // Cov(x_t, x_{t-1} | all data), index t
  int length() const { return static_cast<int>(mean.size()); }
};

/// Rauch-Tung-Striebel backward pass:
///   J_t = P_t^f F' (F P_t^f F' + Q)^-1
///   x_t^s = x_t^f + J_t (x_{t+1}^s - F x_t^f)
///   P_t^s = P_t^f + J_t (P_{t+1}^s - P_{t+1}^pred) J_t'
SmootherResult rts_smooth(const StateSpaceModel& model, const FilterResult& fwd);

struct InverseOptions {
  double condition_threshold = 1e8;
  bool tikhonov = false;       // regularize F + eps*I when near-singular
  double tikhonov_eps = 1e-8;
};

/// Backward propagation x_{t-1} = F^-1 x_t with per-step noise covariance
/// F^-1 Q F^-T. mean[0] is the terminal state; mean[k] lies k steps back.
struct InverseEstimate {
  std::vector<VectorXd> mean;
  std::vector<MatrixXd> cov;
  MatrixXd noise_cov;
};

InverseEstimate inverse_propagate(const StateSpaceModel& model,
                                  const VectorXd& terminal_mean,
                                  const MatrixXd& terminal_cov, int steps,
                                  const InverseOptions& options = {});

struct GateResult {
  bool accepted = false;
  double distance2 = 0.0;
  double threshold = 0.0;
};

/// Squared Mahalanobis distance of candidate from prediction under innovation
/// covariance S, gated by the chi-square upper quantile at significance alpha.
/// Acceptance is distance2 <= threshold.
GateResult consistency_gate(const VectorXd& candidate, const VectorXd& prediction,
                            const MatrixXd& S, double alpha);

struct EmOptions {
  int max_iterations = 100;
  double tolerance = 1e-6;  // stop when log-likelihood gain falls below
  bool update_x0 = true;
  bool update_noise = true;  // false: keep configured sigmas fixed
};

struct EmResult {
  int iterations = 0;
  std::vector<double> log_likelihood;  // per accepted iteration
};

/// Maximum-likelihood noise estimation for the structural parametrization:
/// closed-form M-step restricted to (sigma_trend, sigma_seasonal, sigma_obs),
/// plus optional x0 update. obs is one channel (T x 1).
EmResult fit_em(StructuralModel& model, const MatrixXd& obs,
                const MaskMatrix& mask, const EmOptions& options = {});

/// Seeds x0/P0 from the data (level = first observed value, slope from the
/// observed endpoints, data-scaled prior variances) so EM starts well posed.
void initialize_structural_state(StructuralModel& model, const MatrixXd& obs,
                                 const MaskMatrix& mask);

/// Smoothed observation-space export: epoch, mean H x_t^s, std dev.
void write_smoother_csv(const SmootherResult& smoother,
                        const StateSpaceModel& model,
                        const std::vector<double>& epochs,
                        const std::string& path);

}  // namespace geots
