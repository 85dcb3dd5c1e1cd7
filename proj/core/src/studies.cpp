#include "relcomp/studies.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "relcomp/random.hpp"
#include "relcomp/stats.hpp"

namespace relcomp {

EchoStudy run_echo_study(const EchoStudyParams& params, std::uint64_t seed, int threads) {
  require(params.m >= 1 && params.n >= 1, ErrorCode::invalid_dimensions, "n and m must be positive");
  const double p = params.presence_prob > 0 ? params.presence_prob : 1.0 / static_cast<double>(params.m);
  EchoStudy st{make_dictionary(params.n, params.m, DictionaryKind::gaussian_normalized, derive_seed(seed, "echo/dict")),
               haar_orthogonal(params.n, derive_seed(seed, "echo/A")),
               {}, {}, {}, {}, {}, 0.0, 0.0, 0.0, 0};
  st.extended_truth = echo_extended_atoms(st.truth, st.a);
  const EchoSamples samples = generate_pair_samples(st.truth, st.a, params.sample_count, p, derive_seed(seed, "echo/samples"));
  double support = 0.0;
  for (std::size_t i = 0; i < samples.x_codes.size(); ++i)
    support += static_cast<double>(samples.x_codes[i].support_size() + samples.y_codes[i].support_size());
  st.mean_support = samples.x_codes.empty() ? 0.0 : support / static_cast<double>(samples.x_codes.size());

  if (params.method == LearnMethod::ksvd) {
    KsvdOptions ko;
    ko.atom_count = params.atom_count;
    ko.sparsity = params.sparsity;
    ko.iterations = params.iterations;
    ko.seed = derive_seed(seed, "echo/learn");
    ko.threads = threads;
    st.learned = fit_dictionary_ksvd(samples.z, ko);
  } else {
    SaeOptions so = params.sae;
    if (so.width == 0) so.width = 2 * params.atom_count;
    so.seed = derive_seed(seed, "echo/learn");
    st.learned = fit_dictionary_sae(samples.z, so);
  }
  st.match = match_atoms(st.learned.atoms, st.extended_truth, params.match_threshold);

  EchoOptions eo = params.detector;
  eo.seed = derive_seed(seed, "echo/detect");
  eo.threads = threads;
  st.echo = detect_echo_pairs(st.learned.atoms, eo);
  attach_truth(st.echo, st.a, st.truth.atoms());
  st.alignment_error_all = *st.echo.alignment_error;
  std::vector<bool> hit(static_cast<std::size_t>(2 * params.m), false);
  for (const auto& [l, e] : st.match.assignment) hit[static_cast<std::size_t>(e.truth)] = true;
  std::vector<Index> both;
  for (Index i = 0; i < params.m; ++i)
    if (hit[static_cast<std::size_t>(i)] && hit[static_cast<std::size_t>(i + params.m)]) both.push_back(i);
  st.alignment_atoms = static_cast<Index>(both.size());
  if (!both.empty()) st.echo.alignment_error = alignment_error(st.echo.w, st.a, st.truth.atoms()(Eigen::all, both));
  st.multiplicity = multiplicity_report(st.match, st.echo, st.truth);
  st.paired_fraction = 2.0 * static_cast<double>(st.multiplicity.consistent_pairs) /
                       static_cast<double>(st.extended_truth.cols());
  return st;
}

SteerStudy run_steer_study(const SteerStudyParams& params, std::uint64_t seed, int threads) {
  SteerStudy st;
  st.scenario = make_scenario(params.scenario, derive_seed(seed, "steer/scenario"));
  const LabeledData data = generate_labeled(st.scenario, params.samples, derive_seed(seed, "steer/data"));
  double pos = 0.0;
  for (int l : data.labels) pos += l;
  st.label_rate = pos / static_cast<double>(data.labels.size());
  st.probe = fit_probe(data, params.lambda);
  SweepOptions so = params.sweep;
  so.threads = threads;
  st.sweep = steering_sweep(st.scenario, data, st.probe, make_grid(params.grid_points, params.grid_lo, params.grid_hi), so);
  return st;
}

namespace {

double pooled_spearman(const Matrix& m, const std::vector<LabeledSequence>& data, double tie_tol) {
  std::vector<double> pred, truth;
  for (const auto& s : data) {
    auto [p, t] = probe_distance_pairs(m, s);
    pred.insert(pred.end(), p.begin(), p.end());
    truth.insert(truth.end(), t.begin(), t.end());
  }
  return spearman(pred, truth, tie_tol);
}

LabeledSequence noise_sequence(Index nodes, Index dim, std::uint64_t seed) {
  LabeledSequence s{{}, TreeSpec::random(nodes, derive_seed(seed, "tree"))};
  Rng rng(derive_seed(seed, "tokens"));
  for (Index i = 0; i < nodes; ++i) s.seq.tokens.push_back(rng.normal_vector(dim) / std::sqrt(static_cast<double>(dim)));
  s.seq.positions = make_positions(nodes, dim, derive_seed(seed, "positions"));
  return s;
}

}  // namespace

ProbeStudy run_probe_study(const ProbeStudyParams& params, std::uint64_t seed) {
  require(params.sequences >= 1 && params.nodes >= 2, ErrorCode::invalid_argument, "need sequences and at least two nodes");
  std::vector<LabeledSequence> data;
  for (Index s = 0; s < params.sequences; ++s) {
    TreeSpec tree = TreeSpec::random(params.nodes, derive_seed(seed, "probe/tree", static_cast<std::uint64_t>(s)));
    TokenSequence seq = embed_tree_pythagorean(tree, params.dim, derive_seed(seed, "probe/embed", static_cast<std::uint64_t>(s)));
    data.push_back({std::move(seq), std::move(tree)});
  }
  ProbeOptions po = params.probe;
  po.seed = derive_seed(seed, "probe/fit");
  ProbeStudy st;
  st.probe = fit_structural_probe(data, po);
  st.final_loss = st.probe.final_loss;
  st.spearman = pooled_spearman(st.probe.m, data, params.tie_tol);

  for (Index k = 0; k < params.null_seeds; ++k) {
    const std::uint64_t ns = derive_seed(seed, "probe/null", static_cast<std::uint64_t>(k));
    std::vector<LabeledSequence> train;
    for (Index s = 0; s < params.sequences; ++s)
      train.push_back(noise_sequence(params.nodes, params.dim, derive_seed(ns, "train", static_cast<std::uint64_t>(s))));
    ProbeOptions npo = params.probe;
    npo.seed = derive_seed(ns, "fit");
    const StructuralProbe fit = fit_structural_probe(train, npo);
    std::vector<LabeledSequence> held;
    for (Index s = 0; s < params.sequences; ++s)
      held.push_back(noise_sequence(params.nodes, params.dim, derive_seed(ns, "held-out", static_cast<std::uint64_t>(s))));
    st.null_spearman.push_back(pooled_spearman(fit.m, held, params.tie_tol));
  }
  st.null_mean = mean(st.null_spearman);
  for (double r : st.null_spearman) st.null_max_abs = std::max(st.null_max_abs, std::abs(r));
  return st;
}

DiffsStudy run_diffs_study(const DiffsStudyParams& params, std::uint64_t seed, int threads) {
  DiffsStudy st;
  st.data = make_relation_dataset(params.dim, params.relations, params.sequences, params.tokens_per_sequence, params.noise,
                                  derive_seed(seed, "diffs/data"));
  std::vector<Vector> diffs;
  for (std::size_t s = 0; s < st.data.sequences.size(); ++s) {
    auto d = token_differences(st.data.sequences[s], PairPolicy::labeled, st.data.labeled_pairs[s]);
    diffs.insert(diffs.end(), d.begin(), d.end());
  }
  st.difference_count = static_cast<Index>(diffs.size());
  Matrix x(params.dim, st.difference_count);
  for (Index c = 0; c < st.difference_count; ++c) x.col(c) = diffs[static_cast<std::size_t>(c)];
  KsvdOptions ko;
  ko.atom_count = params.atom_count;
  ko.sparsity = params.sparsity;
  ko.iterations = params.iterations;
  ko.seed = derive_seed(seed, "diffs/learn");
  ko.threads = threads;
  st.learned = fit_dictionary_ksvd(x, ko);
  st.match = match_atoms(st.learned.atoms, st.data.relations, params.match_threshold);
  st.recovered = static_cast<Index>(st.match.assignment.size());
  return st;
}

}  // namespace relcomp
