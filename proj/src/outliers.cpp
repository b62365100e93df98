#include "geots/outliers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace geots {

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile_type7: empty input");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile_type7: p outside [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = p * (static_cast<double>(values.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

OutlierReport detect_outliers_3iqr(const TimeSeries& series) {
  OutlierReport report;
  report.length = series.length();
  report.channel_count = series.channel_count();
  report.per_channel.resize(series.channel_count());

  for (int c = 0; c < series.channel_count(); ++c) {
    std::vector<double> obs;
    obs.reserve(series.length());
    for (int t = 0; t < series.length(); ++t)
      if (series.observed(t, c)) obs.push_back(series.value(t, c));
    if (obs.size() < 4) {
      std::ostringstream os;
      os << "detect_outliers_3iqr: channel '" << series.channels()[c]
         << "' has " << obs.size() << " observed points; need at least 4 for quartiles";
      throw std::runtime_error(os.str());
    }
    ChannelQuartiles& q = report.per_channel[c];
    q.q1 = quantile_type7(obs, 0.25);
    q.q3 = quantile_type7(obs, 0.75);
    q.iqr = q.q3 - q.q1;
    q.lower = q.q1 - 3.0 * q.iqr;
    q.upper = q.q3 + 3.0 * q.iqr;
    for (int t = 0; t < series.length(); ++t) {
      if (!series.observed(t, c)) continue;
      const double v = series.value(t, c);
      // strict inequality: IQR=0 channels flag nothing
      if (v < q.lower) report.flagged.push_back({t, c, v, false});
      else if (v > q.upper) report.flagged.push_back({t, c, v, true});
    }
  }
  return report;
}

TimeSeries remove_outliers(const TimeSeries& series, const OutlierReport& report) {
  if (report.length != series.length() || report.channel_count != series.channel_count())
    throw std::invalid_argument("remove_outliers: report dimensions do not match series");
  MatrixXd values = series.values();
  MaskMatrix mask = series.mask();
  for (const auto& f : report.flagged) mask(f.t, f.channel) = false;
  for (int c = 0; c < series.channel_count(); ++c) {
    bool any = false;
    for (int t = 0; t < series.length(); ++t)
      if (mask(t, c)) { any = true; break; }
    if (!any)
      std::cerr << "warning: channel '" << series.channels()[c]
                << "' is fully masked after outlier removal\n";
  }
  return series.with_data(std::move(values), std::move(mask));
}

void write_outlier_report_csv(const OutlierReport& report,
                              const TimeSeries& series,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_outlier_report_csv: cannot open " + path);
  out << "channel,index,epoch,value,bound_violated\n";
  char buf[40];
  for (const auto& f : report.flagged) {
    std::snprintf(buf, sizeof(buf), "%.17g", series.epochs()[f.t]);
    out << series.channels()[f.channel] << ',' << f.t << ',' << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", f.value);
    out << buf << ',' << (f.above ? "upper" : "lower") << '\n';
  }
}

}  // namespace geots
