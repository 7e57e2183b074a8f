#include "shade/toolkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "shade/rng.hpp"
#include "text_io.hpp"

namespace shade {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<int> split_counts(int total, int parts) {
  std::vector<int> counts(parts, total / parts);
  for (int i = 0; i < total % parts; ++i) counts[i] += 1;
  return counts;
}

}  // namespace

Dataset gen_rings_s(int n, double noise_sigma, std::uint64_t seed) {
  if (n < 30) throw std::invalid_argument("gen_rings_s: need n >= 30");
  if (noise_sigma < 0.0) {
    throw std::invalid_argument("gen_rings_s: noise_sigma must be >= 0");
  }
  Rng rng(seed);
  Dataset out;
  out.x.resize(n, 3);
  out.labels.emplace(n, 0);

  const auto counts = split_counts(n, 3);
  int row = 0;
  // Ring in the xy-plane through the origin; a second ring in the xz-plane
  // centered at (1,0,0) threads through it; the s-curve sits apart at x ~ 4.
  for (int c = 0; c < counts[0]; ++c, ++row) {
    const double a = rng.uniform(0.0, 2.0 * kPi);
    out.x(row, 0) = std::cos(a);
    out.x(row, 1) = std::sin(a);
    out.x(row, 2) = 0.0;
    (*out.labels)[row] = 0;
  }
  for (int c = 0; c < counts[1]; ++c, ++row) {
    const double a = rng.uniform(0.0, 2.0 * kPi);
    out.x(row, 0) = 1.0 + std::cos(a);
    out.x(row, 1) = 0.0;
    out.x(row, 2) = std::sin(a);
    (*out.labels)[row] = 1;
  }
  for (int c = 0; c < counts[2]; ++c, ++row) {
    const double t = rng.uniform(-1.5 * kPi, 1.5 * kPi);
    const double sgn = t < 0.0 ? -1.0 : 1.0;
    out.x(row, 0) = 4.0 + 0.5 * std::sin(t);
    out.x(row, 1) = 0.5 * sgn * (std::cos(t) - 1.0);
    out.x(row, 2) = 0.0;
    (*out.labels)[row] = 2;
  }
  if (noise_sigma > 0.0) {
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < 3; ++c) {
        out.x(r, c) += rng.normal(0.0, noise_sigma);
      }
    }
  }
  return out;
}

Dataset gen_blobs_noise(int k, int n, int d, double spread, double noise_ratio,
                        std::uint64_t seed) {
  if (k < 1 || d < 1 || n < 1) {
    throw std::invalid_argument("gen_blobs_noise: k, n, d must be >= 1");
  }
  if (!(spread > 0.0)) {
    throw std::invalid_argument("gen_blobs_noise: spread must be > 0");
  }
  if (noise_ratio < 0.0 || noise_ratio >= 1.0) {
    throw std::invalid_argument("gen_blobs_noise: noise_ratio must be in [0,1)");
  }
  const int n_noise = static_cast<int>(std::ceil(noise_ratio * n));
  const int n_cluster = n - n_noise;
  if (n_cluster < k) {
    throw std::invalid_argument(
        "gen_blobs_noise: fewer non-noise points than clusters");
  }

  Rng rng(seed);
  const double min_sep = 10.0 * spread;
  const double box = min_sep * k;
  std::vector<Vector> centers;
  for (int c = 0; c < k; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      Vector cand(d);
      for (int j = 0; j < d; ++j) cand[j] = rng.uniform(0.0, box);
      placed = std::all_of(centers.begin(), centers.end(), [&](const Vector& o) {
        return (cand - o).norm() >= min_sep;
      });
      if (placed) centers.push_back(std::move(cand));
    }
    if (!placed) {
      throw std::runtime_error(
          "gen_blobs_noise: could not place separated centers");
    }
  }

  Dataset out;
  out.x.resize(n, d);
  out.labels.emplace(n, kNoiseLabel);
  const auto counts = split_counts(n_cluster, k);
  int row = 0;
  for (int c = 0; c < k; ++c) {
    for (int p = 0; p < counts[c]; ++p, ++row) {
      for (int j = 0; j < d; ++j) {
        out.x(row, j) = centers[c][j] + rng.normal(0.0, spread);
      }
      (*out.labels)[row] = c;
    }
  }

  // Uniform noise over the cluster bounding box inflated by 20%.
  if (n_noise > 0) {
    Vector lo = out.x.topRows(n_cluster).colwise().minCoeff();
    Vector hi = out.x.topRows(n_cluster).colwise().maxCoeff();
    for (int j = 0; j < d; ++j) {
      const double pad = 0.1 * (hi[j] - lo[j]);
      lo[j] -= pad;
      hi[j] += pad;
    }
    for (int p = 0; p < n_noise; ++p, ++row) {
      for (int j = 0; j < d; ++j) {
        out.x(row, j) = rng.uniform(lo[j], hi[j]);
      }
    }
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim whitespace and a possible trailing CR
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string()
                                           : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parses_as_double(const std::string& s) {
  if (s.empty()) return false;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

int to_label(double v, const std::string& where) {
  const double r = std::round(v);
  if (r != v || std::abs(r) > 1e9) {
    throw std::runtime_error(where + ": label is not an integer");
  }
  return static_cast<int>(r);
}

}  // namespace

Dataset load_csv(const std::string& path,
                 const std::optional<std::string>& label_column) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_csv: cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;
  bool has_header = false;
  std::string line;
  int lineno = 0;
  std::size_t width = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (rows.empty() && !has_header) {
      const bool numeric = std::all_of(cells.begin(), cells.end(),
                                       parses_as_double);
      if (!numeric) {
        header = cells;
        has_header = true;
        width = cells.size();
        continue;
      }
      width = cells.size();
    }
    if (cells.size() != width) {
      throw std::runtime_error("load_csv: row " + std::to_string(lineno) +
                               ": expected " + std::to_string(width) +
                               " columns, got " + std::to_string(cells.size()));
    }
    std::vector<double> row(width);
    for (std::size_t c = 0; c < width; ++c) {
      row[c] = detail::parse_double(
          cells[c], "load_csv: row " + std::to_string(lineno) + ", column " +
                        std::to_string(c + 1));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("load_csv: no data rows in " + path);

  int label_idx = -1;
  if (label_column.has_value()) {
    if (has_header) {
      const auto it = std::find(header.begin(), header.end(), *label_column);
      if (it != header.end()) {
        label_idx = static_cast<int>(it - header.begin());
      }
    }
    if (label_idx < 0) {
      // fall back to a 0-based column index
      try {
        label_idx = static_cast<int>(
            detail::parse_int(*label_column, "load_csv: label column"));
      } catch (const std::exception&) {
        throw std::runtime_error("load_csv: label column '" + *label_column +
                                 "' not found in " + path);
      }
      if (label_idx < 0 || label_idx >= static_cast<int>(width)) {
        throw std::runtime_error("load_csv: label column index " +
                                 std::to_string(label_idx) + " out of range");
      }
    }
  }

  Dataset out;
  const std::size_t d = label_idx >= 0 ? width - 1 : width;
  if (d == 0) throw std::runtime_error("load_csv: no feature columns left");
  out.x.resize(static_cast<Eigen::Index>(rows.size()),
               static_cast<Eigen::Index>(d));
  if (label_idx >= 0) out.labels.emplace(rows.size(), 0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::size_t f = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (static_cast<int>(c) == label_idx) {
        (*out.labels)[r] = to_label(
            rows[r][c], "load_csv: row " + std::to_string(r + 1) + ", column " +
                            std::to_string(c + 1));
      } else {
        out.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f++)) =
            rows[r][c];
      }
    }
  }
  return out;
}

void save_csv(const Dataset& data, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_csv: cannot write " + path);
  for (Eigen::Index c = 0; c < data.dim(); ++c) {
    os << (c ? "," : "") << 'f' << c;
  }
  if (data.has_labels()) os << ",label";
  os << '\n';
  for (Eigen::Index r = 0; r < data.n(); ++r) {
    for (Eigen::Index c = 0; c < data.dim(); ++c) {
      os << (c ? "," : "") << detail::format_double(data.x(r, c));
    }
    if (data.has_labels()) os << ',' << (*data.labels)[r];
    os << '\n';
  }
}

std::vector<int> load_labels_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_labels_csv: cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) {
    throw std::runtime_error("load_labels_csv: empty file " + path);
  }

  std::size_t start = 0;
  int label_col = -1;
  int index_col = -1;
  const auto& first = rows.front();
  if (!std::all_of(first.begin(), first.end(), parses_as_double)) {
    for (std::size_t c = 0; c < first.size(); ++c) {
      if (first[c] == "label") label_col = static_cast<int>(c);
      if (first[c] == "point_index") index_col = static_cast<int>(c);
    }
    if (label_col < 0) {
      throw std::runtime_error("load_labels_csv: header has no 'label' column");
    }
    start = 1;
  } else if (first.size() == 1) {
    label_col = 0;
  } else if (first.size() == 2) {
    // headerless "point_index,label"
    index_col = 0;
    label_col = 1;
  } else {
    throw std::runtime_error(
        "load_labels_csv: cannot infer label column without a header");
  }

  std::vector<std::pair<long long, int>> entries;
  for (std::size_t r = start; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    const std::string where =
        "load_labels_csv: row " + std::to_string(r + 1);
    if (label_col >= static_cast<int>(cells.size())) {
      throw std::runtime_error(where + ": missing label column");
    }
    const int label =
        to_label(detail::parse_double(cells[label_col], where), where);
    long long idx = static_cast<long long>(entries.size());
    if (index_col >= 0) {
      idx = detail::parse_int(cells[index_col], where);
    }
    entries.emplace_back(idx, label);
  }
  std::sort(entries.begin(), entries.end());
  std::vector<int> labels;
  labels.reserve(entries.size());
  for (const auto& [idx, label] : entries) labels.push_back(label);
  return labels;
}

void save_labels_csv(const std::vector<int>& labels, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_labels_csv: cannot write " + path);
  os << "point_index,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    os << i << ',' << labels[i] << '\n';
  }
}

}  // namespace shade
