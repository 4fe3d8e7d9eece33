// Command-line entry point: mqed --config run.json [--out-dir DIR] [--threads N] [--verbosity V]

#include <iostream>

#include "CLI11.hpp"
#include "mqed/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mode solver and emission-rate pipeline for inhomogeneous dielectrics"};
  std::string config;
  std::string out_dir;
  mqed::RunOptions opts;
  app.add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  app.add_option("--out-dir", out_dir, "output directory (overrides the config)");
  app.add_option("--threads", opts.threads, "maximum worker threads")->check(CLI::NonNegativeNumber);
  app.add_option("--verbosity", opts.verbosity, "0 quiet, 1 progress, 2 solver detail")
      ->check(CLI::Range(0, 2));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mqed::exit_config;
  }
  if (!out_dir.empty()) opts.out_dir = out_dir;
  return mqed::run_pipeline(config, opts, std::cerr);
}
