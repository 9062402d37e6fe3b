#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  using prdad::cli::Options;
  CLI::App app{"Fourier phase retrieval networks and classical baselines"};
  app.require_subcommand(0, 1);
  bool print_example = false;
  app.add_flag("--example-config", print_example, "print a commented config with all defaults");

  Options opt;
  std::string config, out, checkpoint, run_dir;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "experiment config file");
    sub->add_option("--seed", seed, "overrides experiment.seed");
    sub->add_option("--out", out, "output directory, overrides experiment.out");
    sub->add_option("--workers", opt.workers, "threads; 1 guarantees bit-identical reruns");
  };
  std::vector<std::pair<std::string, CLI::App*>> subs;
  for (auto [name, help] : {std::pair{"train-ae", "train the convolutional autoencoder"},
                            {"train-prdad", "train the magnitude-to-image network"},
                            {"eval", "score a trained network on the test split"},
                            {"baseline", "run error reduction or HIO on the test split"},
                            {"export-figures", "render logs and sample grids of a run"}}) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub);
    const std::string n = name;
    if (n == "export-figures")
      sub->add_option("run_dir", run_dir, "run directory (default: the output directory)");
    else if (n != "baseline")
      sub->add_option("--checkpoint", checkpoint,
                      n == "eval" ? "network checkpoint to evaluate" : "resume from checkpoint");
    subs.emplace_back(n, sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : prdad::cli::kConfigError;
  }
  if (print_example) {
    std::cout << prdad::cli::commented_example();
    return 0;
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    if (!config.empty()) opt.config = config;
    if (sub->count("--seed")) opt.seed = seed;
    if (!out.empty()) opt.out = out;
    if (!checkpoint.empty()) opt.checkpoint = checkpoint;
    if (!run_dir.empty()) opt.run_dir = run_dir;
    return prdad::cli::run(name, opt);
  }
  std::cerr << app.help();
  return prdad::cli::kConfigError;
}
