#include "relcomp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "relcomp/types.hpp"

namespace relcomp {

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double mu = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

std::vector<double> average_ranks(std::span<const double> xs, double tie_tol) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && xs[order[j]] - xs[order[j - 1]] <= tie_tol) ++j;
    const double avg = 0.5 * static_cast<double>(i + j - 1) + 1.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), ErrorCode::length_mismatch, "pearson inputs differ in length");
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double spearman(std::span<const double> xs, std::span<const double> ys, double tie_tol) {
  require(xs.size() == ys.size(), ErrorCode::length_mismatch, "spearman inputs differ in length");
  const auto rx = average_ranks(xs, tie_tol);
  const auto ry = average_ranks(ys, tie_tol);
  return pearson(rx, ry);
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  require(scores.size() == labels.size(), ErrorCode::length_mismatch, "roc_auc inputs differ in length");
  const auto ranks = average_ranks(scores);
  double pos = 0.0, neg = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0) {
      pos += 1.0;
      rank_sum += ranks[i];
    } else {
      neg += 1.0;
    }
  }
  require(pos > 0 && neg > 0, ErrorCode::single_class_data, "roc_auc needs both classes");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

}  // namespace relcomp
