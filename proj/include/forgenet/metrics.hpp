#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "forgenet/data.hpp"

namespace forgenet {

// ROC-AUC as the Mann-Whitney statistic, ties counted 0.5, via rank sums.
double roc_auc(const Vector& scores, const IntVector& labels);

struct PrPoint {
  double threshold;  // score of the group entering at this point
  double recall;
  double precision;
};

// One point per distinct score, scores descending; tied scores enter as a
// single group.
std::vector<PrPoint> pr_curve(const Vector& scores, const IntVector& labels);

// Average precision over the grouped-tie curve.
double pr_auc(const Vector& scores, const IntVector& labels);

// Maximum recall over curve points with precision >= target; 0 if none.
double recall_at_precision(const Vector& scores, const IntVector& labels,
                           double target_precision);

// Precision/recall of a selected set against a relevant set. Empty selection
// has precision 0 by convention.
std::pair<double, double> set_precision_recall(const std::set<int>& selected,
                                               const std::set<int>& relevant,
                                               int universe_size);

void save_pr_curve_csv(const std::string& path, const std::vector<PrPoint>& curve);

}  // namespace forgenet
