#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <functional>

#include "relcomp/experiments.hpp"
#include "relcomp/persistence.hpp"

using namespace relcomp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "relcomp_experiments_test" / name;
  fs::remove_all(dir);
  return dir;
}

Error error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no error raised";
  return Error(ErrorCode::invalid_argument, "none");
}

ExperimentConfig small_gen(const fs::path& out) {
  auto c = parse_config(R"({"experiment": "gen", "seed": 4, "params": {"n": 16, "m": 24, "presence_prob": 0.1, "samples": 30}})");
  c.output_dir = out;
  return c;
}

std::map<std::string, std::string> tree_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_file(e.path());
  return out;
}

}  // namespace

TEST(Config, UnknownKeyIsNamed) {
  const auto e = error_of([] { parse_config(R"({"experiment": "echo", "params": {"smaple_count": 10}})"); });
  EXPECT_EQ(e.code(), ErrorCode::schema_violation);
  EXPECT_NE(std::string(e.what()).find("params.smaple_count"), std::string::npos) << e.what();
  const auto nested = error_of([] { parse_config(R"({"experiment": "echo", "params": {"detector": {"trails": 3}}})"); });
  EXPECT_NE(std::string(nested.what()).find("params.detector.trails"), std::string::npos) << nested.what();
}

TEST(Config, TypeRangeAndSyntaxErrors) {
  EXPECT_EQ(error_of([] { parse_config(R"({"experiment": "gen", "params": {"n": "big"}})"); }).code(),
            ErrorCode::schema_violation);
  EXPECT_EQ(error_of([] { parse_config(R"({"experiment": "gen", "params": {"presence_prob": 1.5}})"); }).code(),
            ErrorCode::schema_violation);
  EXPECT_EQ(error_of([] { parse_config(R"({"experiment": "gen", "threads": 0})"); }).code(), ErrorCode::schema_violation);
  EXPECT_EQ(error_of([] { parse_config(R"({"seed": 1})"); }).code(), ErrorCode::schema_violation);
  EXPECT_EQ(error_of([] { parse_config(R"({"experiment": "warp"})"); }).code(), ErrorCode::schema_violation);
  EXPECT_EQ(error_of([] { parse_config(R"({"experiment": "gen",)"); }).code(), ErrorCode::parse_error);
}

TEST(Config, DefaultsAndRoundTrip) {
  for (auto tag : all_experiments()) {
    if (tag == ExperimentTag::learn) continue;  // needs an input file
    ordered_json j = {{"experiment", to_string(tag)}, {"seed", 9}};
    const auto c = parse_config(j.dump());
    EXPECT_EQ(c.params, default_params(tag)) << to_string(tag);
    const auto text = serialize_config(c);
    EXPECT_EQ(serialize_config(parse_config(text)), text);
  }
}

TEST(Config, ShippedConfigsLoad) {
  for (const auto& e : fs::directory_iterator(RELCOMP_CONFIG_DIR))
    if (e.path().extension() == ".json") EXPECT_NO_THROW(load_config(e.path())) << e.path();
}

TEST(Run, ManifestValidatesAndDetectsTampering) {
  const auto out = scratch("gen");
  const auto r = run(small_gen(out));
  EXPECT_TRUE(validate_manifest(out).empty());
  for (const auto& a : r.artifacts) EXPECT_TRUE(fs::exists(out / a)) << a;
  EXPECT_TRUE(r.headline.contains("coherence"));
  write_file(out / "codes.mat1", "MAT1 0 0\n");
  EXPECT_FALSE(validate_manifest(out).empty());
  fs::remove(out / "manifest.json");
  EXPECT_FALSE(validate_manifest(out).empty());
}

TEST(Run, DeterministicAcrossRunsAndThreads) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  run(small_gen(a));
  auto cb = small_gen(b);
  cb.threads = 3;
  run(cb);
  auto ta = tree_contents(a), tb = tree_contents(b);
  ASSERT_EQ(ta.size(), tb.size());
  for (const auto& [path, body] : ta) {
    if (path == "manifest.json") continue;
    EXPECT_EQ(body, tb[path]) << path;
  }
  const auto again = scratch("det_a2");
  run(small_gen(again));
  EXPECT_EQ(tree_contents(again), ta);
}

TEST(Run, TimingOnlyWhenRequested) {
  const auto out = scratch("timing");
  run(small_gen(out), {true});
  EXPECT_NE(read_file(out / "manifest.json").find("wall_time_seconds"), std::string::npos);
  EXPECT_TRUE(validate_manifest(out).empty());
}

TEST(Plot, CurveCsvParsesBack) {
  std::vector<CurvePoint> pts{{1, "slots n=256", 0.01, 0.002}, {2, "slots n=256", 0.1, -0.0}};
  const auto rows = parse_csv(plot_csv(pts, PlotKind::capacity_curve));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"x_param", "series", "mean", "std"}));
  for (size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(parse_double(rows[i + 1][0]), pts[i].x);
    EXPECT_EQ(rows[i + 1][1], pts[i].series);
    EXPECT_EQ(parse_double(rows[i + 1][2]), pts[i].mean);
    EXPECT_EQ(parse_double(rows[i + 1][3]), pts[i].std);
  }
}

TEST(Plot, HeatmapAndErrors) {
  std::vector<HeatCell> cells{{-1, -1, 0.5}, {-1, 1, 0.25}};
  const auto path = scratch("plot") / "heat.csv";
  fs::create_directories(path.parent_path());
  emit_plot_data(cells, PlotKind::discrepancy_heatmap, path);
  const auto rows = parse_csv(read_file(path));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"c1_hat", "c2_hat", "value"}));
  EXPECT_EQ(parse_double(rows[2][2]), 0.25);
  EXPECT_THROW(plot_csv(cells, PlotKind::capacity_curve), Error);
  EXPECT_THROW(plot_csv(std::vector<CurvePoint>{}, PlotKind::recovery_phase), Error);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ErrorCode::schema_violation), 2);
  EXPECT_EQ(exit_code_for(ErrorCode::parse_error), 2);
  EXPECT_EQ(exit_code_for(ErrorCode::divergence), 3);
  EXPECT_EQ(exit_code_for(ErrorCode::io_failure), 3);
}

#ifdef RELCOMP_CLI
namespace {

int cli(const std::string& args) {
  const int status = std::system((std::string(RELCOMP_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  fs::create_directories(dir);
  write_file(dir / "ok.json", R"({"experiment": "gen", "params": {"n": 8, "m": 8, "samples": 5}})");
  write_file(dir / "typo.json", R"({"experiment": "gen", "params": {"smaple_count": 5}})");
  write_file(dir / "blocker", "x");
  EXPECT_EQ(cli("gen --config " + (dir / "ok.json").string() + " --out " + (dir / "out").string()), 0);
  EXPECT_TRUE(validate_manifest(dir / "out").empty());
  EXPECT_EQ(cli("gen --config " + (dir / "typo.json").string()), 2);
  EXPECT_EQ(cli("bind --config " + (dir / "ok.json").string() + " --out " + (dir / "o2").string()), 2);
  EXPECT_EQ(cli("gen --config " + (dir / "missing.json").string()), 2);
  EXPECT_EQ(cli("gen --config " + (dir / "ok.json").string() + " --out " + (dir / "blocker" / "sub").string()), 3);
  EXPECT_EQ(cli("gen --config " + (dir / "ok.json").string() + " --threads 0"), 2);
  EXPECT_EQ(cli("nonsense"), 2);
}
#endif
