#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "relcomp/tree.hpp"
#include "relcomp/types.hpp"

namespace relcomp {

struct RelationModel {
  Matrix a;
  Vector b;
  double residual = 0.0;  // sum of squared fit errors when produced by lre_fit
};

struct TokenSequence {
  std::vector<Vector> tokens;
  std::vector<Vector> positions;

  Index size() const { return static_cast<Index>(tokens.size()); }
  Index dim() const { return tokens.empty() ? 0 : tokens.front().size(); }
  // Uniform dimension, equal lengths, positions pairwise further apart than 1e-6.
  void validate() const;
};

struct StructuralProbe {
  Matrix m;  // probe-rank x dim
  double final_loss = 0.0;
  std::vector<double> loss_history;
};

struct IdSubspace {
  Matrix a_id;  // rank x dim
  double tau = 0.0;
};

struct IdMatch {
  bool matched = false;
  double distance = 0.0;
};

struct LabeledSequence {
  TokenSequence seq;
  TreeSpec tree;
};

struct ProbeOptions {
  Index rank = 0;  // 0 means dim
  double step_size = 0.03;
  int epochs = 10000;
  std::uint64_t seed = 0;
};

enum class PairPolicy { adjacent, all_pairs, labeled };

Vector lre_apply(const RelationModel& rel, const Vector& t_j);
// pairs are (t_j, t_i): source first, target second.
RelationModel lre_fit(const std::vector<std::pair<Vector, Vector>>& pairs);

Vector bind_positional(const Vector& t_i, const Matrix& a_r, const Vector& p_j);
IdMatch id_match(const IdSubspace& sub, const Vector& t_i, const Vector& t_j);

Index tree_distance(const TreeSpec& tree, Index i, Index j);

// count random orthonormal positions when count <= dim, otherwise random
// unit vectors.
std::vector<Vector> make_positions(Index count, Index dim, std::uint64_t seed);

// Token i sits at the sum of one fresh orthonormal axis per edge on its
// root path, expressed in a Haar-random basis, so squared distances equal
// tree distances.
TokenSequence embed_tree_pythagorean(const TreeSpec& tree, Index dim, std::uint64_t seed);

// Full-batch Adam on the subgradient of mean |‖M(tᵢ - tⱼ)‖² - d(i, j)| over
// all intra-sequence pairs, with step step_size / (1 + epoch / 100). The best
// iterate seen is returned.
StructuralProbe fit_structural_probe(const std::vector<LabeledSequence>& data, const ProbeOptions& opts);
double structural_probe_loss(const StructuralProbe& probe, const std::vector<LabeledSequence>& data);
// Squared probe distances and tree distances for all pairs i < j, in
// lexicographic pair order.
std::pair<std::vector<double>, std::vector<double>> probe_distance_pairs(const Matrix& m, const LabeledSequence& s);

std::vector<Vector> token_differences(const TokenSequence& seq, PairPolicy policy,
                                      const std::vector<std::pair<Index, Index>>& labeled = {});

// Sequences of Gaussian tokens in which each labeled pair (i, j) satisfies
// tᵢ = tⱼ + r_k + noise for one of the hidden relation vectors r_k.
struct RelationDataset {
  std::vector<TokenSequence> sequences;
  std::vector<std::vector<std::pair<Index, Index>>> labeled_pairs;
  Matrix relations;  // dim x relation-count, unit columns
};
RelationDataset make_relation_dataset(Index dim, Index relation_count, Index sequence_count, Index tokens_per_sequence,
                                      double noise, std::uint64_t seed);

// Token pairs for ID matching: bound pairs share a random ID component inside
// a rank-r subspace, unbound pairs have independent IDs. Label 1 = bound.
struct IdDataset {
  IdSubspace sub;
  std::vector<std::pair<Vector, Vector>> pairs;
  std::vector<int> labels;
};
IdDataset make_id_dataset(Index dim, Index id_rank, Index pair_count, double content_scale, std::uint64_t seed);

}  // namespace relcomp
