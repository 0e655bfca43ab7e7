#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "sdlevy/cli.hpp"
#include "sdlevy/errors.hpp"

int main(int argc, char** argv) {
  using namespace sdlevy;
  CLI::App app{"Self-decomposable Levy models: calibration, simulation and spread pricing"};
  app.require_subcommand(1);

  std::string config_path, model, out;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  std::vector<std::string> settings;
  app.add_option("--config", config_path, "key = value run configuration file");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--model", model, "ssd | lssd | bbsd")->check(CLI::IsMember({"ssd", "lssd", "bbsd"}, CLI::ignore_case));
  app.add_option("--paths", paths, "Monte Carlo path count (>= 1000)");
  app.add_option("--out", out, "output directory");
  app.add_option("--set", settings, "extra key=value setting, repeatable");

  const char* commands[][2] = {
      {"calibrate", "fit marginals to quotes and dependence to historical correlation"},
      {"price", "spread prices by simulation and the Fourier lower bound"},
      {"simulate", "forward paths and subordinator sample paths"},
      {"validate", "run the invariant suite on bundled parameters"},
      {"synth", "write a seeded synthetic quotes/history dataset"},
  };
  for (const auto& c : commands) app.add_subcommand(c[0], c[1])->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kParse;
  }

  cli::RunConfig config;
  try {
    if (!config_path.empty()) config = cli::load_config(config_path);
    // Flags override the file.
    for (const auto& s : settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ParseError("--set expects key=value, got '" + s + "'");
      cli::apply_setting(config, s.substr(0, eq), s.substr(eq + 1), "--set");
    }
    if (app.count("--seed")) cli::apply_setting(config, "seed", std::to_string(seed), "--seed");
    if (app.count("--model")) cli::apply_setting(config, "model", model, "--model");
    if (app.count("--paths")) cli::apply_setting(config, "paths", std::to_string(paths), "--paths");
    if (app.count("--out")) cli::apply_setting(config, "out", out, "--out");
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kParse;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  return cli::run_command(name, config, std::cout, std::cerr);
}
