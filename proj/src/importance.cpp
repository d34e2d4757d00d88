#include "forgenet/importance.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "forgenet/num_format.hpp"

namespace forgenet {

ImportanceReport gcw_scores(const MaskedNet& net, const FeatureGraph& g, int p) {
  if (net.mask.rows() != g.adjacency.rows() ||
      (net.mask.array() != g.adjacency.array()).any()) {
    throw std::invalid_argument("net mask does not match the graph adjacency");
  }
  const auto v = static_cast<Eigen::Index>(g.vertices.size());
  const Matrix& w_in = net.weights[0];
  const Matrix& w1 = net.weights[1];

  for (int vertex : g.vertices) {
    if (vertex < 0 || vertex >= p) {
      throw std::invalid_argument("graph vertex outside [0, p)");
    }
  }
  ImportanceReport report;
  report.scores.assign(static_cast<std::size_t>(p), 0.0);
  for (Eigen::Index j = 0; j < v; ++j) {
    double s = 0.0;
    for (Eigen::Index u = 0; u < v; ++u) {
      if (net.mask(j, u) != 0.0) s += std::abs(w_in(j, u));
      if (net.mask(u, j) != 0.0) s += std::abs(w_in(u, j));
    }
    s += w1.row(j).cwiseAbs().sum();
    report.scores[static_cast<std::size_t>(g.vertices[static_cast<std::size_t>(j)])] = s;
  }

  report.ranking.resize(static_cast<std::size_t>(p));
  std::iota(report.ranking.begin(), report.ranking.end(), 0);
  std::stable_sort(report.ranking.begin(), report.ranking.end(),
                   [&report](int a, int b) {
                     return report.scores[static_cast<std::size_t>(a)] >
                            report.scores[static_cast<std::size_t>(b)];
                   });
  return report;
}

void save_importance_csv(const std::string& path, const ImportanceReport& report,
                         const std::vector<std::string>& feature_names) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "feature_name,score,rank\n";
  for (std::size_t rank = 0; rank < report.ranking.size(); ++rank) {
    const int f = report.ranking[rank];
    const std::string name = feature_names.empty()
                                 ? "f" + std::to_string(f)
                                 : feature_names[static_cast<std::size_t>(f)];
    out << name << ',' << format_double(report.scores[static_cast<std::size_t>(f)])
        << ',' << rank + 1 << '\n';
  }
}

}  // namespace forgenet
