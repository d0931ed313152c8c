// reiterate <subcommand> --config <path> [--out <dir>] [--cache <dir>] [--jobs <k>]
#include "reiterate/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace reiterate;
  CLI::App app{"Reiterated homogenization toolkit"};
  app.require_subcommand(1);
  RunOptions opt;
  std::string config, out, cache;
  for (const auto& name : subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "experiment config file");
    sub->add_option("--out", out, "output directory (overrides the config)");
    sub->add_option("--cache", cache, "corrector cache directory");
    sub->add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->callback([&opt, name] { opt.subcommand = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_validation;
  }
  if (!config.empty()) opt.config = config;
  if (!out.empty()) opt.out = out;
  if (!cache.empty()) opt.cache = cache;
  return run(opt, std::cout, std::cerr);
}
