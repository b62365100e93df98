#pragma once

#include <string>

#include "geots/timeseries.hpp"

namespace geots {

/// CSV ingestion options. The file must be UTF-8, comma-separated, with a
/// header row; the epoch column is the first column unless named here.
/// Missing cells are empty or the literal token `NaN`.
struct CsvLayout {
  char delimiter = ',';
  std::string epoch_column;  // empty: first column
};

TimeSeries read_csv(const std::string& path, const CsvLayout& layout = {});

/// Writes epochs and channels with round-trip precision; missing cells are
/// written empty.
void write_csv(const TimeSeries& series, const std::string& path);

}  // namespace geots
