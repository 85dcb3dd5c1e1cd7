#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "relcomp/experiments.hpp"

namespace {

struct Args {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  bool record_timing = false;
};

int run_subcommand(const std::string& name, const Args& args) {
  using namespace relcomp;
  try {
    ExperimentConfig cfg = load_config(args.config);
    if (to_string(cfg.experiment) != name)
      throw Error(ErrorCode::schema_violation,
                  "experiment: config is for \"" + to_string(cfg.experiment) + "\", not \"" + name + "\"");
    if (args.seed) cfg.seed = *args.seed;
    if (args.out) cfg.output_dir = *args.out;
    if (args.threads) cfg.threads = *args.threads;
    const RunResult result = run(cfg, RunOptions{args.record_timing});
    std::cout << result.output_dir.string() << "\n" << result.headline.dump() << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "relcomp " << name << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "relcomp " << name << ": " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic binding and dictionary-learning experiments"};
  app.require_subcommand(1);
  Args args;
  std::string chosen;
  for (relcomp::ExperimentTag tag : relcomp::all_experiments()) {
    const std::string name = relcomp::to_string(tag);
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", args.config, "JSON configuration file")->required();
    sub->add_option("--seed", args.seed, "override the configured master seed");
    sub->add_option("--out", args.out, "override the output directory");
    sub->add_option("--threads", args.threads, "worker threads")->check(CLI::Range(1, 1024));
    sub->add_flag("--record-timing", args.record_timing, "record wall time in the manifest");
    sub->callback([&chosen, name] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  return run_subcommand(chosen, args);
}
