#include "forgenet/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "forgenet/num_format.hpp"

namespace forgenet {

namespace {

void check_sizes(const Vector& scores, const IntVector& labels) {
  if (scores.size() != labels.size() || scores.size() == 0) {
    throw std::invalid_argument("scores and labels must be non-empty and equal-sized");
  }
}

// Indices sorted by score descending, stable in original order.
std::vector<Eigen::Index> order_desc(const Vector& scores) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&scores](Eigen::Index a, Eigen::Index b) {
    return scores(a) > scores(b);
  });
  return order;
}

}  // namespace

double roc_auc(const Vector& scores, const IntVector& labels) {
  check_sizes(scores, labels);
  const Eigen::Index n = scores.size();
  const auto n_pos = static_cast<double>((labels.array() == 1).count());
  const auto n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("roc_auc requires both classes");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&scores](Eigen::Index a, Eigen::Index b) {
    return scores(a) < scores(b);
  });

  // Rank sum of positives with midranks for ties.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores(order[j + 1]) == scores(order[i])) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels(order[k]) == 1) pos_rank_sum += midrank;
    }
    i = j + 1;
  }
  return (pos_rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

std::vector<PrPoint> pr_curve(const Vector& scores, const IntVector& labels) {
  check_sizes(scores, labels);
  const auto n_pos = static_cast<double>((labels.array() == 1).count());
  if (n_pos == 0) throw std::invalid_argument("pr_curve requires at least one positive");

  const auto order = order_desc(scores);
  std::vector<PrPoint> curve;
  double tp = 0.0, taken = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double group_score = scores(order[i]);
    std::size_t j = i;
    while (j < order.size() && scores(order[j]) == group_score) {
      if (labels(order[j]) == 1) tp += 1.0;
      taken += 1.0;
      ++j;
    }
    curve.push_back({group_score, tp / n_pos, tp / taken});
    i = j;
  }
  return curve;
}

double pr_auc(const Vector& scores, const IntVector& labels) {
  const auto curve = pr_curve(scores, labels);
  double auc = 0.0, prev_recall = 0.0;
  for (const auto& pt : curve) {
    auc += (pt.recall - prev_recall) * pt.precision;
    prev_recall = pt.recall;
  }
  return auc;
}

double recall_at_precision(const Vector& scores, const IntVector& labels,
                           double target_precision) {
  const auto curve = pr_curve(scores, labels);
  double best = 0.0;
  for (const auto& pt : curve) {
    if (pt.precision >= target_precision) best = std::max(best, pt.recall);
  }
  return best;
}

std::pair<double, double> set_precision_recall(const std::set<int>& selected,
                                               const std::set<int>& relevant,
                                               int universe_size) {
  if (relevant.empty()) throw std::invalid_argument("relevant set must be non-empty");
  for (int s : selected) {
    if (s < 0 || s >= universe_size) {
      throw std::invalid_argument("selected index outside universe");
    }
  }
  double hits = 0.0;
  for (int s : selected) hits += relevant.count(s) ? 1.0 : 0.0;
  const double precision = selected.empty() ? 0.0 : hits / static_cast<double>(selected.size());
  const double recall = hits / static_cast<double>(relevant.size());
  return {precision, recall};
}

void save_pr_curve_csv(const std::string& path, const std::vector<PrPoint>& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "threshold,precision,recall\n";
  for (const auto& pt : curve) {
    out << format_double(pt.threshold) << ',' << format_double(pt.precision) << ','
        << format_double(pt.recall) << '\n';
  }
}

}  // namespace forgenet
