#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace geots {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using MaskMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Multichannel time series on a shared epoch axis. Values at mask=false
/// positions are placeholders; the mask is authoritative and downstream code
/// must never read them as data. Immutable after construction.
class TimeSeries {
public:
  TimeSeries(std::string station_id, std::vector<double> epochs,
             std::vector<std::string> channels, MatrixXd values,
             MaskMatrix mask);

  const std::string& station_id() const { return station_id_; }
  const std::vector<double>& epochs() const { return epochs_; }
  const std::vector<std::string>& channels() const { return channels_; }
  const MatrixXd& values() const { return values_; }
  const MaskMatrix& mask() const { return mask_; }

  int length() const { return static_cast<int>(epochs_.size()); }
  int channel_count() const { return static_cast<int>(channels_.size()); }
  bool observed(int t, int c) const { return mask_(t, c); }
  double value(int t, int c) const { return values_(t, c); }

  int observed_count(int channel) const;
  int observed_count() const;  // over all channels
  std::vector<int> observed_indices(int channel) const;
  std::vector<int> missing_indices(int channel) const;

  /// Same epochs/channels/station, replacement payload.
  TimeSeries with_data(MatrixXd values, MaskMatrix mask) const;

  /// Nominal sample spacing (median of successive differences).
  double spacing() const;
  /// True when all successive epoch gaps match spacing() within rel_tol.
  bool uniform_spacing(double rel_tol = 1e-6) const;

private:
  std::string station_id_;
  std::vector<double> epochs_;
  std::vector<std::string> channels_;
  MatrixXd values_;
  MaskMatrix mask_;
};

/// Keep a single channel (as a 1-channel series).
TimeSeries select_channel(const TimeSeries& s, int channel);

/// Horizontally merge series sharing identical epoch axes.
TimeSeries merge_channels(const std::vector<TimeSeries>& parts,
                          const std::string& station_id);

struct Harmonic {
  double amplitude = 0.0;
  double period_days = 365.25;
  double phase = 0.0;  // radians
};

/// Test-fixture generator spec: trend + harmonics + AR(1) noise.
/// sigma is the innovation standard deviation; ar1 = 0 gives white noise.
struct SyntheticSpec {
  int length = 0;
  double epoch_start = 0.0;
  double spacing = 1.0;  // days
  double offset = 0.0;
  double trend_rate = 0.0;  // units/day
  std::vector<Harmonic> harmonics;
  double noise_sigma = 0.0;
  double ar1 = 0.0;  // |ar1| < 1
  std::uint64_t seed = 0;
  std::string station_id = "SYNTH";
  std::string channel = "value";

  void validate() const;
};

TimeSeries generate_synthetic(const SyntheticSpec& spec);

struct HeldOutPoint {
  int t = 0;
  int channel = 0;
  double true_value = 0.0;
};

/// Masks floor(fraction * observed) previously observed entries, chosen
/// uniformly at random; returns the masked series and the held-out truth.
std::pair<TimeSeries, std::vector<HeldOutPoint>> apply_random_mask(
    const TimeSeries& s, double fraction, std::uint64_t seed);

}  // namespace geots
