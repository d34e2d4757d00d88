#include "forgenet/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "forgenet/num_format.hpp"
#include "forgenet/rng.hpp"

namespace forgenet {

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  std::size_t begin = cell.find_first_not_of(" \t");
  std::size_t end = cell.find_last_not_of(" \t");
  if (begin == std::string::npos) {
    throw std::runtime_error("empty cell at row " + std::to_string(row) +
                             ", column " + std::to_string(col));
  }
  double value = 0.0;
  const char* first = cell.data() + begin;
  const char* last = cell.data() + end + 1;
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw std::runtime_error("non-numeric cell '" + cell + "' at row " +
                             std::to_string(row) + ", column " +
                             std::to_string(col));
  }
  if (!std::isfinite(value)) {
    throw std::runtime_error("non-finite value at row " + std::to_string(row) +
                             ", column " + std::to_string(col));
  }
  return value;
}

}  // namespace

Dataset load_csv(const std::string& features_path, const std::string& labels_path) {
  const auto feature_lines = read_lines(features_path);
  if (feature_lines.empty()) throw std::runtime_error("empty features file: " + features_path);

  Dataset d;
  d.feature_names = split_commas(feature_lines[0]);
  const auto p = static_cast<Eigen::Index>(d.feature_names.size());
  const auto n = static_cast<Eigen::Index>(feature_lines.size()) - 1;
  if (n < 1) throw std::runtime_error("features file has no data rows");

  std::unordered_set<std::string> seen;
  for (const auto& name : d.feature_names) {
    if (!seen.insert(name).second) {
      throw std::runtime_error("duplicate feature name: " + name);
    }
  }

  d.x.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto cells = split_commas(feature_lines[static_cast<std::size_t>(i) + 1]);
    if (static_cast<Eigen::Index>(cells.size()) != p) {
      throw std::runtime_error("row " + std::to_string(i + 1) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(p));
    }
    for (Eigen::Index j = 0; j < p; ++j) {
      d.x(i, j) = parse_cell(cells[static_cast<std::size_t>(j)],
                             static_cast<std::size_t>(i) + 1,
                             static_cast<std::size_t>(j));
    }
  }

  const auto label_lines = read_lines(labels_path);
  if (static_cast<Eigen::Index>(label_lines.size()) != n) {
    throw std::runtime_error("labels file has " + std::to_string(label_lines.size()) +
                             " rows but features file has " + std::to_string(n));
  }
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::string& cell = label_lines[static_cast<std::size_t>(i)];
    if (cell == "0") {
      d.y(i) = 0;
    } else if (cell == "1") {
      d.y(i) = 1;
    } else {
      throw std::runtime_error("label '" + cell + "' at row " + std::to_string(i) +
                               " is not 0 or 1");
    }
  }
  return d;
}

void save_csv(const Dataset& d, const std::string& features_path,
              const std::string& labels_path) {
  std::ofstream feat(features_path, std::ios::binary);
  if (!feat) throw std::runtime_error("cannot write file: " + features_path);
  for (std::size_t j = 0; j < d.feature_names.size(); ++j) {
    if (j > 0) feat << ',';
    feat << d.feature_names[j];
  }
  feat << '\n';
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    for (Eigen::Index j = 0; j < d.p(); ++j) {
      if (j > 0) feat << ',';
      feat << format_double(d.x(i, j));
    }
    feat << '\n';
  }

  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("cannot write file: " + labels_path);
  for (Eigen::Index i = 0; i < d.n(); ++i) lab << d.y(i) << '\n';
}

Normalization fit_normalization(const Matrix& x) {
  if (x.rows() < 2) throw std::invalid_argument("normalization needs at least 2 samples");
  Normalization norm;
  norm.mean = x.colwise().mean();
  const auto n = static_cast<double>(x.rows());
  norm.sd.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double ss = (x.col(j).array() - norm.mean(j)).square().sum();
    norm.sd(j) = std::sqrt(ss / (n - 1.0));
  }
  return norm;
}

Matrix apply_normalization(const Matrix& x, const Normalization& norm) {
  if (x.cols() != norm.mean.size()) {
    throw std::invalid_argument("normalization dimension mismatch");
  }
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (norm.sd(j) == 0.0) {
      out.col(j).setZero();
    } else {
      out.col(j) = (x.col(j).array() - norm.mean(j)) / norm.sd(j);
    }
  }
  return out;
}

Dataset zscore(const Dataset& d) {
  Dataset out = d;
  out.x = apply_normalization(d.x, fit_normalization(d.x));
  return out;
}

SplitPair stratified_split(const Dataset& d, double test_fraction,
                           std::uint64_t seed) {
  if (test_fraction <= 0.0 || test_fraction >= 1.0) {
    throw std::invalid_argument("test_fraction must lie in (0, 1)");
  }
  std::vector<Eigen::Index> class_idx[2];
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    if (d.y(i) < 0 || d.y(i) > 1) {
      throw std::invalid_argument("labels must be 0 or 1");
    }
    class_idx[d.y(i)].push_back(i);
  }
  for (int c = 0; c < 2; ++c) {
    if (!class_idx[c].empty() && class_idx[c].size() < 2) {
      throw std::invalid_argument("class " + std::to_string(c) +
                                  " has fewer than 2 samples");
    }
  }

  Rng rng(seed);
  std::vector<Eigen::Index> train_idx, test_idx;
  for (int c = 0; c < 2; ++c) {
    auto& idx = class_idx[c];
    if (idx.empty()) continue;
    rng.shuffle(idx);
    const auto count = static_cast<double>(idx.size());
    auto k = static_cast<Eigen::Index>(std::llround(count * test_fraction));
    k = std::max<Eigen::Index>(1, std::min<Eigen::Index>(k, static_cast<Eigen::Index>(idx.size()) - 1));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      (static_cast<Eigen::Index>(i) < k ? test_idx : train_idx).push_back(idx[i]);
    }
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  auto take = [&d](const std::vector<Eigen::Index>& rows) {
    Dataset part;
    part.feature_names = d.feature_names;
    part.x.resize(static_cast<Eigen::Index>(rows.size()), d.p());
    part.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      part.x.row(static_cast<Eigen::Index>(i)) = d.x.row(rows[i]);
      part.y(static_cast<Eigen::Index>(i)) = d.y(rows[i]);
    }
    return part;
  };
  return SplitPair{take(train_idx), take(test_idx)};
}

}  // namespace forgenet
