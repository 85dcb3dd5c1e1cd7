#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "relcomp/types.hpp"

namespace relcomp {

// threshold: label = [c1 b_cur + c2 b_prev >= theta].
// any_flag:  label = b_cur OR b_prev, independent of the scorer weights.
enum class LabelRule { threshold, any_flag };

struct ScenarioParams {
  Index n = 128;
  double c1 = 1.0;
  double c2 = 1.0;
  double theta = 0.5;
  double sigma = 0.1;
  double q1 = 0.5;
  double q2 = 0.5;
  LabelRule rule = LabelRule::threshold;
};

struct SteeringScenario {
  ScenarioParams params;
  Vector v;
  Matrix a;
  Vector av;
  double v_av = 0.0;  // ⟨v, Av⟩

  Index dim() const { return v.size(); }
  // Ground-truth scorer s(t) = c1 ⟨t, v⟩ + c2 ⟨t, Av⟩.
  double score(const Vector& t) const;
  Vector scorer_gradient() const { return params.c1 * v + params.c2 * av; }
};

// Draws a unit v and Haar A, redrawing A until |⟨v, Av⟩| <= 0.1 (at most
// 1000 draws).
SteeringScenario make_scenario(const ScenarioParams& params, std::uint64_t seed);
// Scenario with a caller-chosen v and A.
SteeringScenario make_scenario(const ScenarioParams& params, Vector v, Matrix a);

struct LabeledData {
  Matrix t;  // dim x count
  std::vector<int> labels;
  std::vector<std::pair<int, int>> flags;  // (b_cur, b_prev)
  Matrix background;  // the g component of each column
};

LabeledData generate_labeled(const SteeringScenario& scn, Index count, std::uint64_t seed);

struct ProbeModel {
  Vector weight;
  double bias = 0.0;
  double train_accuracy = 0.0;

  double decision(const Vector& t) const { return weight.dot(t) + bias; }
};

// Ridge least squares on ±1 targets with an unpenalized bias.
ProbeModel fit_probe(const LabeledData& data, double lambda);

Vector steer(const Vector& t, const Vector& direction, double alpha);

struct Decomposition {
  double c1 = 0.0;
  double c2 = 0.0;
  double residual_norm = 0.0;
};

// Least-squares coefficients of w on span{v, Av} and the orthogonal residual.
Decomposition decompose_direction(const SteeringScenario& scn, const Vector& w);

struct SteeringOutcome {
  Vector direction;
  double c1_hat = 0.0;
  double c2_hat = 0.0;
  double score_reduction = 0.0;
  double side_effect_norm = 0.0;
};

enum class AlphaPolicy { fixed, projection };

struct GridCell {
  double c1_hat = 0.0;
  double c2_hat = 0.0;
  double mean_reduction = 0.0;
  double side_effect_norm = 0.0;
  // Largest deviation from s(t) - α(c1⟨d,v⟩ + c2⟨d,Av⟩) over positive samples.
  double identity_error = 0.0;
  bool valid = false;  // false for the zero direction
};

struct Discrepancy {
  double cosine = 0.0;  // cos(best-steer direction, probe direction)
  double probe_c1 = 0.0;
  double probe_c2 = 0.0;
  double scorer_c1 = 0.0;
  double scorer_c2 = 0.0;
  // ‖ĉ/‖ĉ‖ - c/‖c‖‖ between the probe's implied mixture and the scorer's.
  double mixture_gap = 0.0;
};

struct SweepResult {
  SteeringOutcome best;
  Index best_index = -1;
  Vector probe_direction;
  Discrepancy discrepancy;
  std::vector<GridCell> cells;
  double max_identity_error = 0.0;
};

// Square grid of (ĉ1, ĉ2) pairs in row-major order.
std::vector<std::pair<double, double>> make_grid(Index points_per_axis, double lo, double hi);

struct SweepOptions {
  AlphaPolicy policy = AlphaPolicy::fixed;
  double alpha = 1.0;
  int threads = 1;
};

SweepResult steering_sweep(const SteeringScenario& scn, const LabeledData& data, const ProbeModel& probe,
                           const std::vector<std::pair<double, double>>& grid, const SweepOptions& opts);

}  // namespace relcomp
