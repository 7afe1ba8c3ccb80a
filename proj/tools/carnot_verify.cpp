#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "carnot/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Carnot-group parabolic Schauder verification campaigns"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("config", config_path, "Path to the config file")->required();

  auto* list = app.add_subcommand("list", "List the experiment catalog");

  std::string exp_name;
  auto* describe = app.add_subcommand("describe", "Describe one experiment");
  describe->add_option("experiment", exp_name, "Catalog name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      for (const auto& e : carnot::experiment_catalog())
        std::printf("%-22s %s\n", e.name.c_str(), e.description.c_str());
      return 0;
    }
    if (*describe) {
      for (const auto& e : carnot::experiment_catalog()) {
        if (e.name == exp_name) {
          std::printf("%s\n  anchor: %s\n  %s\n", e.name.c_str(), e.anchor.c_str(),
                      e.description.c_str());
          return 0;
        }
      }
      std::fprintf(stderr, "unknown experiment '%s'\n", exp_name.c_str());
      return 2;
    }
    auto config = carnot::ExperimentConfig::from_file(config_path);
    auto manifest = carnot::run_experiment(config);
    std::fputs(manifest.summary().c_str(), stdout);
    std::printf("%s: %s (%.2fs, outputs in %s)\n", config.experiment.c_str(),
                manifest.all_pass ? "ALL CHECKS PASS" : "CHECK FAILURES", manifest.wall_seconds,
                config.outdir.c_str());
    return manifest.all_pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
