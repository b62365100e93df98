#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "geots/timeseries.hpp"

namespace geots {

void SyntheticSpec::validate() const {
  if (length < 2) throw std::invalid_argument("SyntheticSpec: length must be >= 2");
  if (spacing <= 0.0) throw std::invalid_argument("SyntheticSpec: spacing must be > 0");
  if (noise_sigma < 0.0) throw std::invalid_argument("SyntheticSpec: sigma must be >= 0");
  if (std::abs(ar1) >= 1.0) throw std::invalid_argument("SyntheticSpec: |ar1| must be < 1");
  for (const auto& h : harmonics)
    if (h.period_days <= 0.0)
      throw std::invalid_argument("SyntheticSpec: harmonic period must be > 0");
}

TimeSeries generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const int T = spec.length;
  std::vector<double> epochs(T);
  for (int t = 0; t < T; ++t) epochs[t] = spec.epoch_start + t * spec.spacing;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  MatrixXd values(T, 1);
  MaskMatrix mask = MaskMatrix::Constant(T, 1, true);
  double noise = 0.0;
  if (spec.noise_sigma > 0.0) {
    // start the AR(1) recursion from its stationary distribution
    const double stat_sd =
        spec.noise_sigma / std::sqrt(1.0 - spec.ar1 * spec.ar1);
    noise = stat_sd * gauss(rng);
  }
  for (int t = 0; t < T; ++t) {
    const double day = epochs[t];
    double v = spec.offset + spec.trend_rate * (day - spec.epoch_start);
    for (const auto& h : spec.harmonics)
      v += h.amplitude * std::sin(2.0 * M_PI * day / h.period_days + h.phase);
    if (spec.noise_sigma > 0.0) {
      if (t > 0) noise = spec.ar1 * noise + spec.noise_sigma * gauss(rng);
      v += noise;
    }
    values(t, 0) = v;
  }
  return TimeSeries(spec.station_id, std::move(epochs), {spec.channel},
                    std::move(values), std::move(mask));
}

std::pair<TimeSeries, std::vector<HeldOutPoint>> apply_random_mask(
    const TimeSeries& s, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("apply_random_mask: fraction must lie in (0,1)");
  std::vector<std::pair<int, int>> observed;
  for (int c = 0; c < s.channel_count(); ++c)
    for (int t = 0; t < s.length(); ++t)
      if (s.observed(t, c)) observed.emplace_back(t, c);
  const auto k = static_cast<std::size_t>(fraction * observed.size());
  if (k < 1)
    throw std::invalid_argument(
        "apply_random_mask: fraction*observed rounds to zero entries");

  std::mt19937_64 rng(seed);
  std::shuffle(observed.begin(), observed.end(), rng);

  MatrixXd values = s.values();
  MaskMatrix mask = s.mask();
  std::vector<HeldOutPoint> held;
  held.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto [t, c] = observed[i];
    held.push_back({t, c, values(t, c)});
    mask(t, c) = false;
  }
  std::sort(held.begin(), held.end(), [](const auto& a, const auto& b) {
    return a.channel == b.channel ? a.t < b.t : a.channel < b.channel;
  });
  return {s.with_data(std::move(values), std::move(mask)), std::move(held)};
}

}  // namespace geots
