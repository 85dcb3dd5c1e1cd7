#include "relcomp/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "relcomp/persistence.hpp"
#include "relcomp/random.hpp"

#ifndef RELCOMP_VERSION
#define RELCOMP_VERSION "0.0.0"
#endif

namespace relcomp {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::schema_violation, path + ": " + msg);
}

const std::vector<std::pair<ExperimentTag, std::string>>& tag_names() {
  static const std::vector<std::pair<ExperimentTag, std::string>> names{
      {ExperimentTag::gen, "gen"},     {ExperimentTag::bind, "bind"},   {ExperimentTag::learn, "learn"},
      {ExperimentTag::echo, "echo"},   {ExperimentTag::steer, "steer"}, {ExperimentTag::bench, "bench"},
      {ExperimentTag::probe, "probe"}, {ExperimentTag::diffs, "diffs"}};
  return names;
}

ordered_json sae_defaults() {
  return {{"width", 0}, {"l1_weight", 1e-3}, {"step_size", 1e-3}, {"epochs", 200}, {"batch", 256}};
}

ordered_json grid_defaults() {
  return {{"mechanism", "slots"},
          {"n", {256}},
          {"m", {256}},
          {"k", {1}},
          {"rank", {0}},
          {"p", {0.01}},
          {"seeds", 20},
          {"samples_per_cell", 50},
          {"dictionary", "gaussian"},
          {"active_threshold", 0.5},
          {"aligned_fraction", 0.25}};
}

// Arrays whose elements are objects validated against a template.
const std::map<std::string, ordered_json>& element_schemas() {
  static const std::map<std::string, ordered_json> schemas{{"params.grids", grid_defaults()}};
  return schemas;
}

std::string kind_name(const ordered_json& v) {
  if (v.is_boolean()) return "a boolean";
  if (v.is_number_integer()) return "an integer";
  if (v.is_number()) return "a number";
  if (v.is_string()) return "a string";
  if (v.is_array()) return "an array";
  if (v.is_object()) return "an object";
  return "null";
}

void check_scalar(const ordered_json& def, const ordered_json& v, const std::string& path) {
  bool ok = false;
  if (def.is_boolean()) ok = v.is_boolean();
  else if (def.is_number_float()) ok = v.is_number();
  else if (def.is_number_integer()) ok = v.is_number_integer();
  else if (def.is_string()) ok = v.is_string();
  if (!ok) schema_error(path, "expected " + kind_name(def) + ", got " + kind_name(v));
}

ordered_json normalized(const ordered_json& def, const ordered_json& v) {
  if (def.is_number_float()) return v.get<double>();
  return v;
}

void merge(ordered_json& target, const ordered_json& user, const std::string& path) {
  if (!user.is_object()) schema_error(path, "expected an object, got " + kind_name(user));
  for (const auto& [key, value] : user.items()) {
    const std::string sub = path + "." + key;
    if (!target.contains(key)) schema_error(sub, "unknown key");
    ordered_json& def = target[key];
    if (def.is_object()) {
      merge(def, value, sub);
    } else if (def.is_array()) {
      if (!value.is_array()) schema_error(sub, "expected an array, got " + kind_name(value));
      ordered_json out = ordered_json::array();
      const auto schema = element_schemas().find(sub);
      for (std::size_t i = 0; i < value.size(); ++i) {
        const std::string ep = sub + "[" + std::to_string(i) + "]";
        if (schema != element_schemas().end()) {
          ordered_json elem = schema->second;
          merge(elem, value[i], ep);
          out.push_back(std::move(elem));
        } else {
          const ordered_json& elem_def = def.empty() ? ordered_json(0.0) : def[0];
          check_scalar(elem_def, value[i], ep);
          out.push_back(normalized(elem_def, value[i]));
        }
      }
      def = std::move(out);
    } else {
      check_scalar(def, value, sub);
      def = normalized(def, value);
    }
  }
}

// Range-checked accessors over a merged parameter block.
class Params {
 public:
  Params(const ordered_json& j, std::string path) : j_(j), path_(std::move(path)) {}

  Params sub(const std::string& key) const { return Params(j_.at(key), path_ + "." + key); }
  std::string where(const std::string& key) const { return path_ + "." + key; }
  const ordered_json& raw(const std::string& key) const { return j_.at(key); }

  Index index(const std::string& key, Index min) const {
    const auto v = j_.at(key).get<std::int64_t>();
    if (v < min) schema_error(where(key), "must be at least " + std::to_string(min));
    return static_cast<Index>(v);
  }
  double real(const std::string& key, double lo, double hi, bool open_lo = false) const {
    const double v = j_.at(key).get<double>();
    if (!std::isfinite(v) || v < lo || v > hi || (open_lo && v == lo))
      schema_error(where(key), "must lie in " + std::string(open_lo ? "(" : "[") + format_double(lo) + ", " +
                                   format_double(hi) + "]");
    return v;
  }
  double positive(const std::string& key) const {
    return real(key, 0.0, std::numeric_limits<double>::max(), true);
  }
  std::string choice(const std::string& key, const std::vector<std::string>& options) const {
    const auto v = j_.at(key).get<std::string>();
    if (std::find(options.begin(), options.end(), v) == options.end()) {
      std::string list;
      for (const auto& o : options) list += (list.empty() ? "" : ", ") + o;
      schema_error(where(key), "must be one of " + list);
    }
    return v;
  }
  std::vector<Index> indices(const std::string& key, Index min) const {
    std::vector<Index> out;
    const auto& arr = j_.at(key);
    if (arr.empty()) schema_error(where(key), "must not be empty");
    for (const auto& v : arr) {
      const auto x = v.get<std::int64_t>();
      if (x < min) schema_error(where(key), "entries must be at least " + std::to_string(min));
      out.push_back(static_cast<Index>(x));
    }
    return out;
  }
  std::vector<double> reals(const std::string& key, double lo, double hi) const {
    std::vector<double> out;
    const auto& arr = j_.at(key);
    if (arr.empty()) schema_error(where(key), "must not be empty");
    for (const auto& v : arr) {
      const double x = v.get<double>();
      if (!(x > lo && x <= hi)) schema_error(where(key), "entries must lie in (" + format_double(lo) + ", " + format_double(hi) + "]");
      out.push_back(x);
    }
    return out;
  }

 private:
  const ordered_json& j_;
  std::string path_;
};

DictionaryKind dictionary_kind(const Params& p, const std::string& key) {
  return p.choice(key, {"gaussian", "orthogonal"}) == "gaussian" ? DictionaryKind::gaussian_normalized
                                                                 : DictionaryKind::orthogonal_subset;
}

SaeOptions sae_options(const Params& p) {
  SaeOptions o;
  o.width = p.index("width", 0);
  o.l1_weight = p.real("l1_weight", 0.0, 1e6);
  o.step_size = p.positive("step_size");
  o.epochs = static_cast<int>(p.index("epochs", 0));
  o.batch = p.index("batch", 1);
  return o;
}

struct GenParams {
  Index n, m, samples;
  DictionaryKind dictionary;
  double presence_prob;
  Amplitude amplitude;
  double active_threshold;
};

GenParams gen_params_of(const Params& p) {
  GenParams g{};
  g.n = p.index("n", 1);
  g.m = p.index("m", 1);
  g.samples = p.index("samples", 1);
  g.dictionary = dictionary_kind(p, "dictionary");
  g.presence_prob = p.real("presence_prob", 0.0, 1.0);
  const double lo = p.real("amplitude_lo", -1e6, 1e6);
  const double hi = p.real("amplitude_hi", -1e6, 1e6);
  if (hi < lo) schema_error(p.where("amplitude_hi"), "must not be below amplitude_lo");
  g.amplitude = p.choice("amplitude", {"constant", "uniform"}) == "constant" ? Amplitude::constant()
                                                                             : Amplitude::uniform_between(lo, hi);
  g.active_threshold = p.real("active_threshold", 0.0, 1e6);
  if (g.dictionary == DictionaryKind::orthogonal_subset && g.m > g.n)
    schema_error(p.where("m"), "orthogonal dictionaries need m <= n");
  return g;
}

BenchGrid grid_of(const Params& p, std::uint64_t master_seed, int threads) {
  BenchGrid g;
  g.mechanism = mechanism_from_string(p.choice("mechanism", {"slots", "additive_pair", "hrr", "outer"}));
  g.n = p.indices("n", 1);
  g.m = p.indices("m", 1);
  g.k = p.indices("k", 1);
  g.rank = p.indices("rank", 0);
  g.p = p.reals("p", 0.0, 1.0);
  const Index seeds = p.index("seeds", 1);
  g.seeds.clear();
  for (Index s = 0; s < seeds; ++s) g.seeds.push_back(static_cast<std::uint64_t>(s));
  g.samples_per_cell = p.index("samples_per_cell", 1);
  g.dictionary = dictionary_kind(p, "dictionary");
  g.active_threshold = p.real("active_threshold", 0.0, 1e6);
  g.aligned_fraction = p.real("aligned_fraction", 0.0, 1.0);
  g.master_seed = master_seed;
  g.threads = threads;
  for (Index r : g.rank)
    for (Index n : g.n)
      if (r > n) schema_error(p.where("rank"), "rank must not exceed n");
  try {
    g.validate();
  } catch (const Error& e) {
    schema_error(p.where("mechanism"), e.what());
  }
  return g;
}

struct LearnParams {
  fs::path input, truth;
  Index n, m, samples;
  double presence_prob;
  LearnMethod method;
  Index atom_count, sparsity;
  int iterations;
  double match_threshold;
  SaeOptions sae;
};

LearnParams learn_params_of(const Params& p) {
  LearnParams l{};
  l.input = p.raw("input").get<std::string>();
  l.truth = p.raw("truth").get<std::string>();
  if (!l.truth.empty() && l.input.empty()) schema_error(p.where("truth"), "needs params.input");
  l.n = p.index("n", 1);
  l.m = p.index("m", 1);
  l.samples = p.index("samples", 1);
  l.presence_prob = p.real("presence_prob", 0.0, 1.0);
  l.method = p.choice("method", {"ksvd", "sae"}) == "ksvd" ? LearnMethod::ksvd : LearnMethod::sae;
  l.atom_count = p.index("atom_count", 1);
  l.sparsity = p.index("sparsity", 1);
  l.iterations = static_cast<int>(p.index("iterations", 0));
  l.match_threshold = p.real("match_threshold", 0.0, 1.0);
  l.sae = sae_options(p.sub("sae"));
  return l;
}

struct BindParams {
  BenchGrid grid;
};

BindParams bind_params_of(const Params& p, std::uint64_t seed, int threads) {
  BenchGrid g;
  g.mechanism = mechanism_from_string(p.choice("mechanism", {"slots", "additive_pair", "hrr", "outer"}));
  g.n = {p.index("n", 1)};
  g.m = {p.index("m", 1)};
  g.k = {p.index("k", 1)};
  g.rank = {p.index("rank", 0)};
  if (g.rank[0] > g.n[0]) schema_error(p.where("rank"), "rank must not exceed n");
  g.p = {p.real("p", 0.0, 1.0, true)};
  g.seeds.clear();
  for (Index s = 0; s < p.index("seeds", 1); ++s) g.seeds.push_back(static_cast<std::uint64_t>(s));
  g.samples_per_cell = p.index("samples", 1);
  g.dictionary = dictionary_kind(p, "dictionary");
  g.active_threshold = p.real("active_threshold", 0.0, 1e6);
  g.master_seed = seed;
  g.threads = threads;
  return {g};
}

// Full typed validation; unused results are discarded.
void validate_params(const ExperimentConfig& c) {
  const Params p(c.params, "params");
  switch (c.experiment) {
    case ExperimentTag::gen: gen_params_of(p); break;
    case ExperimentTag::bind: bind_params_of(p, c.seed, c.threads); break;
    case ExperimentTag::learn: {
      const LearnParams l = learn_params_of(p);
      if (!l.input.empty() && !fs::is_regular_file(l.input))
        schema_error(p.where("input"), "file not found: " + l.input.string());
      if (!l.truth.empty() && !fs::is_regular_file(l.truth))
        schema_error(p.where("truth"), "file not found: " + l.truth.string());
      break;
    }
    case ExperimentTag::echo: echo_params(c); break;
    case ExperimentTag::steer: steer_params(c); break;
    case ExperimentTag::bench: bench_grids(c); break;
    case ExperimentTag::probe: probe_params(c); break;
    case ExperimentTag::diffs: diffs_params(c); break;
  }
}

ordered_json to_json(const std::vector<Index>& xs) {
  ordered_json a = ordered_json::array();
  for (Index x : xs) a.push_back(x);
  return a;
}

ordered_json to_json(const MatchReport& m) {
  ordered_json assignment = ordered_json::array();
  for (const auto& [learned, e] : m.assignment)
    assignment.push_back({{"learned", learned}, {"truth", e.truth}, {"cosine", e.cosine}});
  return {{"threshold", m.threshold},
          {"truth_count", m.truth_count},
          {"learned_count", m.learned_count},
          {"recovery_rate", m.recovery_rate},
          {"assignment", assignment},
          {"unmatched_learned", to_json(m.unmatched_learned)},
          {"unmatched_truth", to_json(m.unmatched_truth)}};
}

ordered_json optional_number(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json to_json(const EchoReport& r) {
  ordered_json pairs = ordered_json::array();
  for (const auto& p : r.pairs)
    pairs.push_back({{"source", p.source}, {"target", p.target}, {"sign", p.sign}, {"residual", p.residual}});
  return {{"atom_count", r.atom_count},
          {"hypothesis_size", r.hypothesis_size},
          {"inlier_count", r.inlier_count},
          {"alignment_error", optional_number(r.alignment_error)},
          {"multiplicity_factor", r.multiplicity_factor},
          {"pairs", pairs}};
}

ordered_json to_json(const MultiplicitySummary& s) {
  return {{"learned_count", s.learned_count},
          {"truth_count", s.truth_count},
          {"extended_truth_count", s.extended_truth_count},
          {"plain_recovery", s.plain_recovery},
          {"echo_recovery", s.echo_recovery},
          {"multiplicity_factor", s.multiplicity_factor},
          {"consistent_pairs", s.consistent_pairs},
          {"dark_atoms", to_json(s.dark_atoms)}};
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

std::string loss_csv(const std::string& step_name, const std::vector<double>& losses) {
  std::string out = step_name + ",loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) out += std::to_string(i + 1) + "," + format_double(losses[i]) + "\n";
  return out;
}

Matrix column(const Vector& v) { return Matrix(v); }

// Collects artifacts in memory; they are written in path order at the end.
struct Artifacts {
  std::map<std::string, std::string> files;
  ordered_json headline = ordered_json::object();

  void add(const std::string& name, std::string contents) { files[name] = std::move(contents); }
};

void run_gen(const ExperimentConfig& c, Artifacts& out) {
  const GenParams g = gen_params_of(Params(c.params, "params"));
  const FeatureDictionary dict = make_dictionary(g.n, g.m, g.dictionary, derive_seed(c.seed, "gen/dict"));
  Rng rng = Rng::stream(c.seed, "gen/codes");
  Matrix codes = Matrix::Zero(g.m, g.samples);
  Matrix samples(g.n, g.samples);
  const double mu = dict.coherence();
  double support = 0.0, max_err = 0.0, mse = 0.0, ratio = 0.0;
  Index violations = 0;
  for (Index s = 0; s < g.samples; ++s) {
    const SparseCode code = sample_code(g.m, g.presence_prob, g.amplitude, rng);
    codes.col(s) = code.to_dense();
    samples.col(s) = encode(dict, code);
    const SparseCode est = readback(dict, samples.col(s));
    const ReadbackMetrics rm = readback_error(code, est, g.active_threshold);
    support += static_cast<double>(code.support_size());
    max_err = std::max(max_err, rm.max_abs_error);
    mse += rm.mse;
    const double bound = mu * code.l1_norm();
    if (rm.max_abs_error > bound + 1e-12) ++violations;
    if (bound > 0.0) ratio = std::max(ratio, rm.max_abs_error / bound);
  }
  const double count = static_cast<double>(g.samples);
  out.add("dictionary.mat1", matrix_to_mat1(dict.atoms()));
  out.add("codes.mat1", matrix_to_mat1(codes));
  out.add("samples.mat1", matrix_to_mat1(samples));
  out.headline = {{"coherence", mu},
                  {"mean_support", support / count},
                  {"readback_max_error", max_err},
                  {"readback_mse", mse / count},
                  {"coherence_bound_violations", violations}};
  ordered_json summary = out.headline;
  summary["max_error_to_bound_ratio"] = ratio;
  out.add("gen.json", dump(summary));
}

void run_bind(const ExperimentConfig& c, Artifacts& out) {
  const BindParams b = bind_params_of(Params(c.params, "params"), c.seed, c.threads);
  const std::vector<BenchCell> cells = run_capacity(b.grid);
  const BenchCell& cell = cells.at(0);
  if (!cell.error.empty()) throw Error(ErrorCode::degenerate_data, "bind cell failed: " + cell.error);
  const CapacitySummary s = summarize(cells);
  out.add("bind.csv", s.csv);
  out.add("bind.json", s.json + "\n");
  out.headline = {{"mae_mean", cell.mae_mean},
                  {"mae_std", cell.mae_std},
                  {"precision", cell.precision},
                  {"recall", cell.recall},
                  {"norm_growth", cell.norm_growth}};
}

void run_learn(const ExperimentConfig& c, Artifacts& out) {
  const LearnParams l = learn_params_of(Params(c.params, "params"));
  Matrix samples;
  std::optional<Matrix> truth;
  if (!l.input.empty()) {
    samples = load_matrix(l.input);
    if (!l.truth.empty()) truth = load_matrix(l.truth);
  } else {
    const FeatureDictionary dict = make_dictionary(l.n, l.m, DictionaryKind::gaussian_normalized, derive_seed(c.seed, "learn/dict"));
    Rng rng = Rng::stream(c.seed, "learn/codes");
    samples.resize(l.n, l.samples);
    for (Index s = 0; s < l.samples; ++s) samples.col(s) = encode(dict, sample_code(l.m, l.presence_prob, Amplitude::constant(), rng));
    truth = dict.atoms();
  }
  LearnedDictionary learned;
  if (l.method == LearnMethod::ksvd) {
    KsvdOptions ko;
    ko.atom_count = l.atom_count;
    ko.sparsity = l.sparsity;
    ko.iterations = l.iterations;
    ko.seed = derive_seed(c.seed, "learn/fit");
    ko.threads = c.threads;
    learned = fit_dictionary_ksvd(samples, ko);
  } else {
    SaeOptions so = l.sae;
    if (so.width == 0) so.width = l.atom_count;
    so.seed = derive_seed(c.seed, "learn/fit");
    learned = fit_dictionary_sae(samples, so);
  }
  out.add("learned.mat1", matrix_to_mat1(learned.atoms));
  out.add("loss.csv", loss_csv(l.method == LearnMethod::ksvd ? "iteration" : "epoch", learned.loss_history));
  ordered_json summary = {{"method", to_string(learned.method)},
                          {"atom_count", learned.count()},
                          {"iterations", learned.iterations},
                          {"final_loss", learned.final_loss}};
  out.headline = {{"final_loss", learned.final_loss}};
  if (truth) {
    const MatchReport m = match_atoms(learned.atoms, *truth, l.match_threshold);
    summary["match"] = to_json(m);
    out.headline["recovery_rate"] = m.recovery_rate;
  }
  out.add("learn.json", dump(summary));
}

void run_echo(const ExperimentConfig& c, Artifacts& out) {
  const EchoStudy st = run_echo_study(echo_params(c), c.seed, c.threads);
  out.add("learned.mat1", matrix_to_mat1(st.learned.atoms));
  out.add("w.mat1", matrix_to_mat1(st.echo.w));
  out.add("match.json", dump(to_json(st.match)));
  ordered_json echo = to_json(st.echo);
  echo["multiplicity"] = to_json(st.multiplicity);
  echo["paired_fraction"] = st.paired_fraction;
  echo["alignment_error_all"] = st.alignment_error_all;
  echo["alignment_atoms"] = st.alignment_atoms;
  out.add("echo.json", dump(echo));
  const std::string align = st.echo.alignment_error ? format_double(*st.echo.alignment_error) : "";
  out.add("echo.csv",
          "recovery_rate,multiplicity_factor,pairs,consistent_pairs,alignment_error,paired_fraction,dark_atoms,final_loss\n" +
              format_double(st.match.recovery_rate) + "," + format_double(st.multiplicity.multiplicity_factor) + "," +
              std::to_string(st.echo.pairs.size()) + "," + std::to_string(st.multiplicity.consistent_pairs) + "," + align +
              "," + format_double(st.paired_fraction) + "," + std::to_string(st.multiplicity.dark_atoms.size()) + "," +
              format_double(st.learned.final_loss) + "\n");
  out.add("loss.csv", loss_csv("iteration", st.learned.loss_history));
  out.headline = {{"recovery_rate", st.match.recovery_rate},
                  {"multiplicity_factor", st.multiplicity.multiplicity_factor},
                  {"alignment_error", optional_number(st.echo.alignment_error)},
                  {"alignment_error_all", st.alignment_error_all},
                  {"paired_fraction", st.paired_fraction},
                  {"dark_atoms", st.multiplicity.dark_atoms.size()}};
}

void run_steer(const ExperimentConfig& c, Artifacts& out) {
  const SteerStudyParams sp = steer_params(c);
  const SteerStudy st = run_steer_study(sp, c.seed, c.threads);
  const SweepResult& r = st.sweep;
  const Discrepancy& d = r.discrepancy;
  ordered_json summary = {{"cosine", d.cosine},
                          {"probe_c1", d.probe_c1},
                          {"probe_c2", d.probe_c2},
                          {"scorer_c1", d.scorer_c1},
                          {"scorer_c2", d.scorer_c2},
                          {"mixture_gap", d.mixture_gap},
                          {"best",
                           {{"index", r.best_index},
                            {"c1_hat", r.best.c1_hat},
                            {"c2_hat", r.best.c2_hat},
                            {"score_reduction", r.best.score_reduction},
                            {"side_effect_norm", r.best.side_effect_norm}}},
                          {"max_identity_error", r.max_identity_error},
                          {"label_rate", st.label_rate},
                          {"probe_train_accuracy", st.probe.train_accuracy},
                          {"v_av", st.scenario.v_av}};
  out.add("discrepancy.json", dump(summary));
  std::string grid = "c1_hat,c2_hat,mean_reduction,side_effect_norm,identity_error,valid\n";
  std::vector<HeatCell> heat;
  for (const GridCell& g : r.cells) {
    grid += format_double(g.c1_hat) + "," + format_double(g.c2_hat) + "," + format_double(g.mean_reduction) + "," +
            format_double(g.side_effect_norm) + "," + format_double(g.identity_error) + "," + (g.valid ? "1" : "0") + "\n";
    heat.push_back({g.c1_hat, g.c2_hat, g.mean_reduction});
  }
  out.add("grid.csv", grid);
  out.add("heatmap.csv", plot_csv(heat, PlotKind::discrepancy_heatmap));
  out.add("probe_direction.mat1", matrix_to_mat1(column(r.probe_direction)));
  out.add("best_direction.mat1", matrix_to_mat1(column(r.best.direction)));
  out.headline = {{"cosine", d.cosine}, {"mixture_gap", d.mixture_gap}, {"max_identity_error", r.max_identity_error}};
}

std::string series_name(const BenchCell& c, bool with_k) {
  std::ostringstream s;
  s << to_string(c.mechanism) << " n=" << c.n << " m=" << c.m;
  if (with_k) s << " k=" << c.k;
  s << " rank=" << c.rank << " p=" << format_double(c.p);
  return s.str();
}

void run_bench(const ExperimentConfig& c, Artifacts& out) {
  std::vector<BenchCell> cells;
  for (const BenchGrid& g : bench_grids(c)) {
    auto part = run_capacity(g);
    cells.insert(cells.end(), part.begin(), part.end());
  }
  const CapacitySummary s = summarize(cells);
  out.add("capacity.csv", s.csv);
  out.add("capacity.json", s.json + "\n");
  std::vector<CurvePoint> curve, phase;
  Index failed = 0;
  for (const BenchCell& cell : cells) {
    if (!cell.error.empty()) {
      ++failed;
      continue;
    }
    curve.push_back({static_cast<double>(cell.k), series_name(cell, false), cell.mae_mean, cell.mae_std});
    phase.push_back({static_cast<double>(cell.rank) / static_cast<double>(cell.n), series_name(cell, true), cell.recall,
                     cell.recall_std});
  }
  if (!curve.empty()) {
    out.add("capacity_curve.csv", plot_csv(curve, PlotKind::capacity_curve));
    out.add("recovery_phase.csv", plot_csv(phase, PlotKind::recovery_phase));
  }
  bool mono_k = true, mono_m = true;
  for (const auto& m : monotonicity_checks(cells, "k")) mono_k = mono_k && m.non_decreasing;
  for (const auto& m : monotonicity_checks(cells, "m")) mono_m = mono_m && m.non_decreasing;
  out.headline = {{"cell_count", cells.size()},
                  {"failed_cells", failed},
                  {"monotone_in_k", mono_k ? 1 : 0},
                  {"monotone_in_m", mono_m ? 1 : 0}};
}

void run_probe(const ExperimentConfig& c, Artifacts& out) {
  const ProbeStudy st = run_probe_study(probe_params(c), c.seed);
  ordered_json nulls = ordered_json::array();
  for (double r : st.null_spearman) nulls.push_back(r);
  out.add("probe.json", dump({{"spearman", st.spearman},
                              {"final_loss", st.final_loss},
                              {"epochs", st.probe.loss_history.size()},
                              {"null_spearman", nulls},
                              {"null_mean", st.null_mean},
                              {"null_max_abs", st.null_max_abs}}));
  out.add("probe_m.mat1", matrix_to_mat1(st.probe.m));
  out.add("loss.csv", loss_csv("epoch", st.probe.loss_history));
  out.headline = {{"spearman", st.spearman},
                  {"final_loss", st.final_loss},
                  {"null_mean", st.null_mean},
                  {"null_max_abs", st.null_max_abs}};
}

void run_diffs(const ExperimentConfig& c, Artifacts& out) {
  const DiffsStudyParams dp = diffs_params(c);
  const DiffsStudy st = run_diffs_study(dp, c.seed, c.threads);
  out.add("learned.mat1", matrix_to_mat1(st.learned.atoms));
  out.add("relations.mat1", matrix_to_mat1(st.data.relations));
  out.add("diffs.json", dump({{"recovered", st.recovered},
                              {"relation_count", st.data.relations.cols()},
                              {"difference_count", st.difference_count},
                              {"final_loss", st.learned.final_loss},
                              {"match", to_json(st.match)}}));
  out.headline = {{"recovered", st.recovered}, {"recovery_rate", st.match.recovery_rate}};
}

// Experiment inputs as echoed into the output tree: everything that affects
// results, without the output directory and thread count.
ordered_json input_echo(const ExperimentConfig& c) {
  return {{"experiment", to_string(c.experiment)}, {"seed", c.seed}, {"params", c.params}};
}

}  // namespace

std::string to_string(ExperimentTag tag) {
  for (const auto& [t, name] : tag_names())
    if (t == tag) return name;
  return "unknown";
}

ExperimentTag experiment_from_string(const std::string& s) {
  for (const auto& [t, name] : tag_names())
    if (name == s) return t;
  schema_error("experiment", "unknown experiment \"" + s + "\"");
}

const std::vector<ExperimentTag>& all_experiments() {
  static const std::vector<ExperimentTag> tags = [] {
    std::vector<ExperimentTag> out;
    for (const auto& entry : tag_names()) out.push_back(entry.first);
    return out;
  }();
  return tags;
}

ordered_json default_params(ExperimentTag tag) {
  switch (tag) {
    case ExperimentTag::gen:
      return {{"n", 256},          {"m", 512},         {"dictionary", "gaussian"}, {"presence_prob", 0.01},
              {"amplitude", "constant"}, {"amplitude_lo", 0.5}, {"amplitude_hi", 1.5}, {"samples", 1000},
              {"active_threshold", 0.5}};
    case ExperimentTag::bind:
      return {{"mechanism", "slots"}, {"n", 256}, {"m", 256}, {"k", 2}, {"rank", 0}, {"p", 0.01},
              {"seeds", 5},           {"samples", 50}, {"dictionary", "gaussian"}, {"active_threshold", 0.5}};
    case ExperimentTag::learn:
      return {{"input", ""},      {"truth", ""},     {"n", 64},         {"m", 128},
              {"presence_prob", 0.03}, {"samples", 4000}, {"method", "ksvd"}, {"atom_count", 128},
              {"sparsity", 4},    {"iterations", 30}, {"match_threshold", 0.9}, {"sae", sae_defaults()}};
    case ExperimentTag::echo: {
      const EchoStudyParams d;
      return {{"n", d.n},
              {"m", d.m},
              {"presence_prob", d.presence_prob},
              {"sample_count", d.sample_count},
              {"atom_count", d.atom_count},
              {"method", "ksvd"},
              {"sparsity", d.sparsity},
              {"iterations", d.iterations},
              {"match_threshold", d.match_threshold},
              {"sae", sae_defaults()},
              {"detector",
               {{"hypothesis_size", d.detector.hypothesis_size},
                {"trials", d.detector.trials},
                {"inlier_tol", d.detector.inlier_tol},
                {"gram_tol", d.detector.gram_tol}}}};
    }
    case ExperimentTag::steer: {
      const SteerStudyParams d;
      const ScenarioParams& s = d.scenario;
      return {{"scenario",
               {{"n", s.n},
                {"c1", s.c1},
                {"c2", s.c2},
                {"theta", s.theta},
                {"sigma", s.sigma},
                {"q1", s.q1},
                {"q2", s.q2},
                {"rule", "threshold"}}},
              {"samples", d.samples},
              {"lambda", d.lambda},
              {"grid_points", d.grid_points},
              {"grid_lo", d.grid_lo},
              {"grid_hi", d.grid_hi},
              {"policy", "fixed"},
              {"alpha", d.sweep.alpha}};
    }
    case ExperimentTag::bench: {
      ordered_json slots = grid_defaults();
      slots["k"] = {1, 2, 4, 8};
      ordered_json additive = grid_defaults();
      additive["mechanism"] = "additive_pair";
      additive["rank"] = {32, 64, 256};
      return {{"grids", {slots, additive}}};
    }
    case ExperimentTag::probe: {
      const ProbeStudyParams d;
      return {{"nodes", d.nodes},
              {"dim", d.dim},
              {"sequences", d.sequences},
              {"rank", d.probe.rank},
              {"step_size", d.probe.step_size},
              {"epochs", d.probe.epochs},
              {"null_seeds", d.null_seeds},
              {"tie_tol", d.tie_tol}};
    }
    case ExperimentTag::diffs: {
      const DiffsStudyParams d;
      return {{"dim", d.dim},
              {"relations", d.relations},
              {"sequences", d.sequences},
              {"tokens_per_sequence", d.tokens_per_sequence},
              {"noise", d.noise},
              {"atom_count", d.atom_count},
              {"sparsity", d.sparsity},
              {"iterations", d.iterations},
              {"match_threshold", d.match_threshold}};
    }
  }
  return ordered_json::object();
}

EchoStudyParams echo_params(const ExperimentConfig& config) {
  const Params p(config.params, "params");
  EchoStudyParams e;
  e.n = p.index("n", 1);
  e.m = p.index("m", 1);
  e.presence_prob = p.real("presence_prob", 0.0, 1.0);
  e.sample_count = p.index("sample_count", 1);
  e.atom_count = p.index("atom_count", 2);
  e.method = p.choice("method", {"ksvd", "sae"}) == "ksvd" ? LearnMethod::ksvd : LearnMethod::sae;
  e.sparsity = p.index("sparsity", 1);
  e.iterations = static_cast<int>(p.index("iterations", 0));
  e.match_threshold = p.real("match_threshold", 0.0, 1.0);
  e.sae = sae_options(p.sub("sae"));
  const Params d = p.sub("detector");
  e.detector.hypothesis_size = d.index("hypothesis_size", 0);
  e.detector.trials = static_cast<int>(d.index("trials", 1));
  e.detector.inlier_tol = d.positive("inlier_tol");
  e.detector.gram_tol = d.real("gram_tol", 0.0, 2.0);
  return e;
}

SteerStudyParams steer_params(const ExperimentConfig& config) {
  const Params p(config.params, "params");
  SteerStudyParams s;
  const Params sc = p.sub("scenario");
  s.scenario.n = sc.index("n", 2);
  s.scenario.c1 = sc.real("c1", -1e6, 1e6);
  s.scenario.c2 = sc.real("c2", -1e6, 1e6);
  s.scenario.theta = sc.real("theta", -1e6, 1e6);
  s.scenario.sigma = sc.real("sigma", 0.0, 1e6);
  s.scenario.q1 = sc.real("q1", 0.0, 1.0);
  s.scenario.q2 = sc.real("q2", 0.0, 1.0);
  s.scenario.rule = sc.choice("rule", {"threshold", "any_flag"}) == "threshold" ? LabelRule::threshold : LabelRule::any_flag;
  s.samples = p.index("samples", 2);
  s.lambda = p.real("lambda", 0.0, 1e12);
  s.grid_points = p.index("grid_points", 2);
  s.grid_lo = p.real("grid_lo", -1e6, 1e6);
  s.grid_hi = p.real("grid_hi", -1e6, 1e6);
  if (s.grid_hi <= s.grid_lo) schema_error(p.where("grid_hi"), "must exceed grid_lo");
  s.sweep.policy = p.choice("policy", {"fixed", "projection"}) == "fixed" ? AlphaPolicy::fixed : AlphaPolicy::projection;
  s.sweep.alpha = p.real("alpha", -1e6, 1e6);
  return s;
}

ProbeStudyParams probe_params(const ExperimentConfig& config) {
  const Params p(config.params, "params");
  ProbeStudyParams s;
  s.nodes = p.index("nodes", 2);
  s.dim = p.index("dim", 1);
  if (s.dim < s.nodes - 1) schema_error(p.where("dim"), "must be at least nodes - 1");
  s.sequences = p.index("sequences", 1);
  s.probe.rank = p.index("rank", 0);
  s.probe.step_size = p.positive("step_size");
  s.probe.epochs = static_cast<int>(p.index("epochs", 1));
  s.null_seeds = p.index("null_seeds", 0);
  s.tie_tol = p.real("tie_tol", 0.0, 1e6);
  return s;
}

DiffsStudyParams diffs_params(const ExperimentConfig& config) {
  const Params p(config.params, "params");
  DiffsStudyParams s;
  s.dim = p.index("dim", 1);
  s.relations = p.index("relations", 1);
  s.sequences = p.index("sequences", 1);
  s.tokens_per_sequence = p.index("tokens_per_sequence", 2);
  if (s.tokens_per_sequence % 2 != 0) schema_error(p.where("tokens_per_sequence"), "must be even");
  s.noise = p.real("noise", 0.0, 1e6);
  s.atom_count = p.index("atom_count", 1);
  s.sparsity = p.index("sparsity", 1);
  s.iterations = static_cast<int>(p.index("iterations", 0));
  s.match_threshold = p.real("match_threshold", 0.0, 1.0);
  return s;
}

std::vector<BenchGrid> bench_grids(const ExperimentConfig& config) {
  std::vector<BenchGrid> out;
  const auto& grids = config.params.at("grids");
  if (grids.empty()) schema_error("params.grids", "must not be empty");
  for (std::size_t i = 0; i < grids.size(); ++i) {
    // Grids draw from separate seed streams so cell indices never collide.
    const std::uint64_t seed = i == 0 ? config.seed : derive_seed(config.seed, "bench/grid", i);
    out.push_back(grid_of(Params(grids[i], "params.grids[" + std::to_string(i) + "]"), seed, config.threads));
  }
  return out;
}

ExperimentConfig parse_config(std::string_view text, const fs::path& base_dir) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::parse_error, std::string("config: ") + e.what());
  }
  if (!doc.is_object()) schema_error("config", "top level must be an object");
  static const std::set<std::string> known{"experiment", "seed", "output_dir", "threads", "params"};
  for (const auto& [key, value] : doc.items())
    if (!known.count(key)) schema_error(key, "unknown key");
  if (!doc.contains("experiment")) schema_error("experiment", "missing required key");
  if (!doc["experiment"].is_string()) schema_error("experiment", "expected a string");

  ExperimentConfig c;
  c.experiment = experiment_from_string(doc["experiment"].get<std::string>());
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) schema_error("seed", "expected a non-negative integer");
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("threads")) {
    if (!doc["threads"].is_number_integer() || doc["threads"].get<std::int64_t>() < 1 ||
        doc["threads"].get<std::int64_t>() > 1024)
      schema_error("threads", "expected an integer in [1, 1024]");
    c.threads = doc["threads"].get<int>();
  }
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string()) schema_error("output_dir", "expected a string");
    c.output_dir = doc["output_dir"].get<std::string>();
  } else {
    c.output_dir = fs::path("out") / to_string(c.experiment);
  }
  c.params = default_params(c.experiment);
  if (doc.contains("params")) merge(c.params, doc["params"], "params");
  if (c.experiment == ExperimentTag::learn) {
    for (const char* key : {"input", "truth"}) {
      const auto s = c.params[key].get<std::string>();
      if (!s.empty() && fs::path(s).is_relative() && !base_dir.empty()) c.params[key] = (base_dir / s).lexically_normal().string();
    }
  }
  validate_params(c);
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::parse_error, "cannot read config " + path.string());
  }
  return parse_config(text, path.parent_path());
}

std::string serialize_config(const ExperimentConfig& config) {
  ordered_json j = {{"experiment", to_string(config.experiment)},
                    {"seed", config.seed},
                    {"output_dir", config.output_dir.string()},
                    {"threads", config.threads},
                    {"params", config.params}};
  return dump(j);
}

RunResult run(const ExperimentConfig& config, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  validate_params(config);
  Artifacts out;
  out.add("config.json", dump(input_echo(config)));
  switch (config.experiment) {
    case ExperimentTag::gen: run_gen(config, out); break;
    case ExperimentTag::bind: run_bind(config, out); break;
    case ExperimentTag::learn: run_learn(config, out); break;
    case ExperimentTag::echo: run_echo(config, out); break;
    case ExperimentTag::steer: run_steer(config, out); break;
    case ExperimentTag::bench: run_bench(config, out); break;
    case ExperimentTag::probe: run_probe(config, out); break;
    case ExperimentTag::diffs: run_diffs(config, out); break;
  }

  RunResult result;
  result.output_dir = config.output_dir;
  result.headline = out.headline;
  ordered_json artifacts = ordered_json::array();
  for (const auto& [name, contents] : out.files) {
    write_file(config.output_dir / name, contents);
    artifacts.push_back({{"path", name}, {"bytes", contents.size()}, {"sha256", sha256_hex(contents)}});
    result.artifacts.push_back(name);
  }
  ordered_json manifest = {{"tool", "relcomp"},
                           {"version", RELCOMP_VERSION},
                           {"experiment", to_string(config.experiment)},
                           {"seed", config.seed},
                           {"threads", config.threads},
                           {"config_sha256", sha256_hex(out.files.at("config.json"))},
                           {"headline", out.headline},
                           {"artifacts", artifacts}};
  if (options.record_timing) {
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
    manifest["wall_time_seconds"] = wall.count();
  }
  write_file(config.output_dir / "manifest.json", dump(manifest));
  return result;
}

std::vector<std::string> validate_manifest(const fs::path& dir) {
  std::vector<std::string> problems;
  ordered_json m;
  try {
    m = ordered_json::parse(read_file(dir / "manifest.json"));
  } catch (const std::exception& e) {
    return {std::string("manifest unreadable: ") + e.what()};
  }
  auto need = [&](const char* key, bool ok) {
    if (!m.contains(key)) problems.push_back(std::string("missing ") + key);
    else if (!ok) problems.push_back(std::string("bad ") + key);
  };
  need("tool", m.contains("tool") && m["tool"] == "relcomp");
  need("version", m.contains("version") && m["version"].is_string() && !m["version"].get<std::string>().empty());
  need("seed", m.contains("seed") && m["seed"].is_number_unsigned());
  need("threads", m.contains("threads") && m["threads"].is_number_integer() && m["threads"].get<int>() >= 1);
  need("config_sha256", m.contains("config_sha256") && m["config_sha256"].is_string());
  need("headline", m.contains("headline") && m["headline"].is_object() && !m["headline"].empty());
  need("artifacts", m.contains("artifacts") && m["artifacts"].is_array());
  if (m.contains("experiment")) {
    bool known = false;
    for (const auto& [t, name] : tag_names()) known = known || (m["experiment"].is_string() && m["experiment"] == name);
    if (!known) problems.push_back("bad experiment");
  } else {
    problems.push_back("missing experiment");
  }
  if (!problems.empty()) return problems;

  for (const auto& [key, v] : m["headline"].items())
    if (!(v.is_number() || v.is_null())) problems.push_back("headline " + key + " is not a number");

  std::set<std::string> listed;
  for (const auto& a : m["artifacts"]) {
    if (!a.is_object() || !a.contains("path") || !a.contains("bytes") || !a.contains("sha256")) {
      problems.push_back("malformed artifact entry");
      continue;
    }
    const auto path = a["path"].get<std::string>();
    listed.insert(path);
    const fs::path file = dir / path;
    if (!fs::is_regular_file(file)) {
      problems.push_back("missing artifact " + path);
      continue;
    }
    const std::string contents = read_file(file);
    if (contents.size() != a["bytes"].get<std::size_t>()) problems.push_back("size mismatch for " + path);
    if (sha256_hex(contents) != a["sha256"].get<std::string>()) problems.push_back("hash mismatch for " + path);
  }
  if (!listed.count("config.json")) {
    problems.push_back("config.json not listed");
  } else if (fs::is_regular_file(dir / "config.json")) {
    const std::string cfg = read_file(dir / "config.json");
    if (sha256_hex(cfg) != m["config_sha256"].get<std::string>()) problems.push_back("config_sha256 mismatch");
    try {
      const auto echo = ordered_json::parse(cfg);
      if (echo.value("experiment", "") != m["experiment"].get<std::string>()) problems.push_back("experiment differs from config.json");
      if (!echo.contains("seed") || echo["seed"] != m["seed"]) problems.push_back("seed differs from config.json");
    } catch (const std::exception&) {
      problems.push_back("config.json is not valid JSON");
    }
  }
  return problems;
}

int exit_code_for(ErrorCode code) {
  if (is_numerical(code) || code == ErrorCode::io_failure) return 3;
  return 2;
}

std::string to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::capacity_curve: return "capacity-curve";
    case PlotKind::recovery_phase: return "recovery-phase";
    case PlotKind::discrepancy_heatmap: return "discrepancy-heatmap";
  }
  return "unknown";
}

std::string plot_csv(const PlotTable& table, PlotKind kind) {
  const bool heat = kind == PlotKind::discrepancy_heatmap;
  require(heat == std::holds_alternative<std::vector<HeatCell>>(table), ErrorCode::invalid_argument,
          "table shape does not match plot kind " + to_string(kind));
  std::string out;
  if (heat) {
    const auto& cells = std::get<std::vector<HeatCell>>(table);
    require(!cells.empty(), ErrorCode::invalid_argument, "empty plot table");
    out = "c1_hat,c2_hat,value\n";
    for (const auto& c : cells) out += format_double(c.c1_hat) + "," + format_double(c.c2_hat) + "," + format_double(c.value) + "\n";
  } else {
    const auto& points = std::get<std::vector<CurvePoint>>(table);
    require(!points.empty(), ErrorCode::invalid_argument, "empty plot table");
    out = "x_param,series,mean,std\n";
    for (const auto& p : points) {
      require(p.series.find_first_of(",\n\"") == std::string::npos, ErrorCode::invalid_argument,
              "series names may not contain commas, quotes or newlines");
      out += format_double(p.x) + "," + p.series + "," + format_double(p.mean) + "," + format_double(p.std) + "\n";
    }
  }
  return out;
}

void emit_plot_data(const PlotTable& table, PlotKind kind, const fs::path& path) {
  write_file(path, plot_csv(table, kind));
}

}  // namespace relcomp
