#pragma once

#include <string>
#include <utility>
#include <vector>

#include "geots/timeseries.hpp"

namespace geots {

struct ChannelQuartiles {
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double lower = 0.0;  // q1 - 3*iqr
  double upper = 0.0;  // q3 + 3*iqr
};

struct OutlierFlag {
  int t = 0;
  int channel = 0;
  double value = 0.0;
  bool above = false;  // true: value > upper, false: value < lower
};

struct OutlierReport {
  std::vector<ChannelQuartiles> per_channel;
  std::vector<OutlierFlag> flagged;
  int length = 0;
  int channel_count = 0;
};

/// Linear interpolation of order statistics (the common "type 7" convention):
/// quantile position p*(n-1) between sorted neighbours. p in [0,1].
double quantile_type7(std::vector<double> values, double p);

/// Flags observed entries strictly outside [Q1 - 3*IQR, Q3 + 3*IQR],
/// per channel, quartiles over observed entries only.
OutlierReport detect_outliers_3iqr(const TimeSeries& series);

/// Converts every flagged entry to a gap (mask=false). Epoch grid unchanged.
TimeSeries remove_outliers(const TimeSeries& series, const OutlierReport& report);

/// Sidecar CSV: channel, index, epoch, value, bound_violated.
void write_outlier_report_csv(const OutlierReport& report,
                              const TimeSeries& series,
                              const std::string& path);

}  // namespace geots
