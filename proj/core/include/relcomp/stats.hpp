#pragma once

#include <span>
#include <vector>

namespace relcomp {

double mean(std::span<const double> xs);
// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> xs);

// Average ranks (1-based). Values whose consecutive sorted gaps are all at
// most tie_tol form one tie group; tie_tol = 0 means exact ties only.
std::vector<double> average_ranks(std::span<const double> xs, double tie_tol = 0.0);

double pearson(std::span<const double> xs, std::span<const double> ys);

// Spearman correlation as the Pearson correlation of average ranks. Returns
// 0 when either side is constant.
double spearman(std::span<const double> xs, std::span<const double> ys, double tie_tol = 0.0);

// Area under the ROC curve for "score predicts label 1", ties counted half.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace relcomp
