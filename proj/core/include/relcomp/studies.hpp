#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relcomp/dict_learning.hpp"
#include "relcomp/echo_analysis.hpp"
#include "relcomp/relational.hpp"
#include "relcomp/steering_lab.hpp"

namespace relcomp {

// End-to-end studies shared by the command-line runner and the test suites.

struct EchoStudyParams {
  Index n = 256;
  Index m = 32;
  double presence_prob = 0.0;  // 0: 1/m
  Index sample_count = 20000;
  Index atom_count = 64;
  LearnMethod method = LearnMethod::ksvd;
  Index sparsity = 4;
  int iterations = 30;
  // SAE settings, used when method = sae (width 0: 2 · 2m).
  SaeOptions sae;
  double match_threshold = 0.9;
  EchoOptions detector;
};

struct EchoStudy {
  FeatureDictionary truth;
  Matrix a;
  Matrix extended_truth;  // [V, AV]
  LearnedDictionary learned;
  MatchReport match;
  EchoReport echo;
  MultiplicitySummary multiplicity;
  double mean_support = 0.0;  // combined x and y support per sample
  // Fraction of the 2m extended truth atoms that occur in a detected pair,
  // through the learned atom matched to them.
  double paired_fraction = 0.0;
  // echo.alignment_error is taken over the truth atoms vᵢ for which the
  // learner matched both vᵢ and Avᵢ (all of V when there are none); this is
  // the same error over every vᵢ.
  double alignment_error_all = 0.0;
  Index alignment_atoms = 0;
};

EchoStudy run_echo_study(const EchoStudyParams& params, std::uint64_t seed, int threads);

struct SteerStudyParams {
  ScenarioParams scenario;
  Index samples = 8000;
  double lambda = 1000.0;
  Index grid_points = 41;
  double grid_lo = -2.0;
  double grid_hi = 2.0;
  SweepOptions sweep;
};

struct SteerStudy {
  SteeringScenario scenario;
  ProbeModel probe;
  SweepResult sweep;
  double label_rate = 0.0;
};

SteerStudy run_steer_study(const SteerStudyParams& params, std::uint64_t seed, int threads);

struct ProbeStudyParams {
  Index nodes = 15;
  Index dim = 32;
  Index sequences = 4;
  ProbeOptions probe;
  Index null_seeds = 20;
  // Tie tolerance for ranking probe distances.
  double tie_tol = 0.05;
};

struct ProbeStudy {
  StructuralProbe probe;
  double spearman = 0.0;
  double final_loss = 0.0;
  std::vector<double> null_spearman;  // one per null seed, pooled over as many held-out sequences as training used
  double null_mean = 0.0;
  double null_max_abs = 0.0;
};

ProbeStudy run_probe_study(const ProbeStudyParams& params, std::uint64_t seed);

struct DiffsStudyParams {
  Index dim = 64;
  Index relations = 8;
  Index sequences = 200;
  Index tokens_per_sequence = 8;
  double noise = 0.05;
  Index atom_count = 8;
  Index sparsity = 1;
  int iterations = 30;
  double match_threshold = 0.9;
};

struct DiffsStudy {
  RelationDataset data;
  LearnedDictionary learned;
  MatchReport match;
  Index recovered = 0;
  Index difference_count = 0;
};

DiffsStudy run_diffs_study(const DiffsStudyParams& params, std::uint64_t seed, int threads);

}  // namespace relcomp
