#include "geots/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace geots {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, delim)) out.push_back(cell);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool is_missing_token(const std::string& cell) {
  return cell.empty() || cell == "NaN" || cell == "nan" || cell == "NAN";
}

double parse_number(const std::string& cell, std::size_t row, std::size_t col) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != cell.size()) {
    std::ostringstream os;
    os << "read_csv: unparsable number '" << cell << "' at row " << row
       << ", column " << col;
    throw std::runtime_error(os.str());
  }
  return v;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

TimeSeries read_csv(const std::string& path, const CsvLayout& layout) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path);

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("read_csv: empty file " + path);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
    line.erase(0, 3);

  auto header = split_line(line, layout.delimiter);
  for (auto& h : header) h = trim(h);
  if (header.size() < 2)
    throw std::runtime_error("read_csv: header must name an epoch column and at least one value column");

  std::size_t epoch_col = 0;
  if (!layout.epoch_column.empty()) {
    auto it = std::find(header.begin(), header.end(), layout.epoch_column);
    if (it == header.end())
      throw std::runtime_error("read_csv: epoch column '" + layout.epoch_column +
                               "' not found in header");
    epoch_col = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<std::string> channels;
  std::vector<std::size_t> channel_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i == epoch_col) continue;
    channels.push_back(header[i]);
    channel_cols.push_back(i);
  }

  std::vector<double> epochs;
  std::vector<std::vector<double>> cols(channels.size());
  std::vector<std::vector<bool>> obs(channels.size());

  std::size_t row = 1;  // header was row 0
  while (std::getline(in, line)) {
    if (trim(line).empty()) {
      ++row;
      continue;
    }
    auto cells = split_line(line, layout.delimiter);
    if (cells.size() != header.size()) {
      std::ostringstream os;
      os << "read_csv: row " << row << " has " << cells.size()
         << " cells, expected " << header.size();
      throw std::runtime_error(os.str());
    }
    const double epoch = parse_number(trim(cells[epoch_col]), row, epoch_col);
    if (!epochs.empty()) {
      if (epoch == epochs.back()) {
        std::ostringstream os;
        os << "read_csv: duplicate epoch " << format_double(epoch) << " at row " << row;
        throw std::runtime_error(os.str());
      }
      if (epoch < epochs.back()) {
        std::ostringstream os;
        os << "read_csv: non-monotonic epochs at row " << row << " ("
           << format_double(epochs.back()) << " followed by " << format_double(epoch) << ")";
        throw std::runtime_error(os.str());
      }
    }
    epochs.push_back(epoch);
    for (std::size_t c = 0; c < channel_cols.size(); ++c) {
      const std::string cell = trim(cells[channel_cols[c]]);
      if (is_missing_token(cell)) {
        cols[c].push_back(0.0);
        obs[c].push_back(false);
      } else {
        cols[c].push_back(parse_number(cell, row, channel_cols[c]));
        obs[c].push_back(true);
      }
    }
    ++row;
  }
  if (epochs.empty()) throw std::runtime_error("read_csv: no data rows in " + path);

  const auto T = static_cast<Eigen::Index>(epochs.size());
  const auto C = static_cast<Eigen::Index>(channels.size());
  MatrixXd values(T, C);
  MaskMatrix mask(T, C);
  for (Eigen::Index c = 0; c < C; ++c)
    for (Eigen::Index t = 0; t < T; ++t) {
      values(t, c) = cols[c][t];
      mask(t, c) = obs[c][t];
    }

  const std::string station = std::filesystem::path(path).stem().string();
  return TimeSeries(station, std::move(epochs), std::move(channels),
                    std::move(values), std::move(mask));
}

void write_csv(const TimeSeries& series, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path + " for writing");
  out << "epoch";
  for (const auto& ch : series.channels()) out << ',' << ch;
  out << '\n';
  for (int t = 0; t < series.length(); ++t) {
    out << format_double(series.epochs()[t]);
    for (int c = 0; c < series.channel_count(); ++c) {
      out << ',';
      if (series.observed(t, c)) out << format_double(series.value(t, c));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

}  // namespace geots
