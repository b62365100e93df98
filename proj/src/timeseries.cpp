#include "geots/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace geots {

TimeSeries::TimeSeries(std::string station_id, std::vector<double> epochs,
                       std::vector<std::string> channels, MatrixXd values,
                       MaskMatrix mask)
    : station_id_(std::move(station_id)),
      epochs_(std::move(epochs)),
      channels_(std::move(channels)),
      values_(std::move(values)),
      mask_(std::move(mask)) {
  const auto T = static_cast<Eigen::Index>(epochs_.size());
  const auto C = static_cast<Eigen::Index>(channels_.size());
  if (T < 1) throw std::invalid_argument("TimeSeries: need at least one epoch");
  if (C < 1) throw std::invalid_argument("TimeSeries: need at least one channel");
  if (values_.rows() != T || values_.cols() != C)
    throw std::invalid_argument("TimeSeries: values shape does not match epochs/channels");
  if (mask_.rows() != T || mask_.cols() != C)
    throw std::invalid_argument("TimeSeries: mask shape does not match epochs/channels");
  for (std::size_t i = 1; i < epochs_.size(); ++i) {
    if (!(epochs_[i] > epochs_[i - 1])) {
      std::ostringstream os;
      os << "TimeSeries: epochs not strictly increasing at row " << i << " ("
         << epochs_[i - 1] << " followed by " << epochs_[i] << ")";
      throw std::invalid_argument(os.str());
    }
  }
  // Park a neutral placeholder behind every gap so stray reads stay finite.
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index c = 0; c < C; ++c)
      if (!mask_(t, c)) values_(t, c) = 0.0;
}

int TimeSeries::observed_count(int channel) const {
  int n = 0;
  for (int t = 0; t < length(); ++t)
    if (mask_(t, channel)) ++n;
  return n;
}

int TimeSeries::observed_count() const {
  int n = 0;
  for (int c = 0; c < channel_count(); ++c) n += observed_count(c);
  return n;
}

std::vector<int> TimeSeries::observed_indices(int channel) const {
  std::vector<int> idx;
  for (int t = 0; t < length(); ++t)
    if (mask_(t, channel)) idx.push_back(t);
  return idx;
}

std::vector<int> TimeSeries::missing_indices(int channel) const {
  std::vector<int> idx;
  for (int t = 0; t < length(); ++t)
    if (!mask_(t, channel)) idx.push_back(t);
  return idx;
}

TimeSeries TimeSeries::with_data(MatrixXd values, MaskMatrix mask) const {
  return TimeSeries(station_id_, epochs_, channels_, std::move(values),
                    std::move(mask));
}

double TimeSeries::spacing() const {
  if (length() < 2) return 1.0;
  std::vector<double> gaps(epochs_.size() - 1);
  for (std::size_t i = 1; i < epochs_.size(); ++i)
    gaps[i - 1] = epochs_[i] - epochs_[i - 1];
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  return gaps[gaps.size() / 2];
}

bool TimeSeries::uniform_spacing(double rel_tol) const {
  if (length() < 2) return true;
  const double dt = spacing();
  for (std::size_t i = 1; i < epochs_.size(); ++i) {
    const double gap = epochs_[i] - epochs_[i - 1];
    if (std::abs(gap - dt) > rel_tol * std::max(std::abs(dt), 1.0)) return false;
  }
  return true;
}

TimeSeries select_channel(const TimeSeries& s, int channel) {
  if (channel < 0 || channel >= s.channel_count())
    throw std::out_of_range("select_channel: channel index out of range");
  return TimeSeries(s.station_id(), s.epochs(), {s.channels()[channel]},
                    s.values().col(channel), s.mask().col(channel));
}

TimeSeries merge_channels(const std::vector<TimeSeries>& parts,
                          const std::string& station_id) {
  if (parts.empty()) throw std::invalid_argument("merge_channels: no inputs");
  const auto& epochs = parts.front().epochs();
  int C = 0;
  for (const auto& p : parts) {
    if (p.epochs() != epochs)
      throw std::invalid_argument("merge_channels: epoch axes differ");
    C += p.channel_count();
  }
  const int T = parts.front().length();
  MatrixXd values(T, C);
  MaskMatrix mask(T, C);
  std::vector<std::string> names;
  int at = 0;
  for (const auto& p : parts) {
    values.middleCols(at, p.channel_count()) = p.values();
    mask.middleCols(at, p.channel_count()) = p.mask();
    names.insert(names.end(), p.channels().begin(), p.channels().end());
    at += p.channel_count();
  }
  return TimeSeries(station_id, epochs, names, std::move(values), std::move(mask));
}

}  // namespace geots
