#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdlevy/cli.hpp"
#include "sdlevy/errors.hpp"
#include "sdlevy/market_data.hpp"

using namespace sdlevy;
using namespace sdlevy::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sdlevy_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_tool(const std::string& args) {
  const std::string cmd = std::string(SDLEVY_TOOL_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Calibration artifact built directly from a bundled parameter set.
std::string bundled_artifact(const fs::path& dir, ModelKind kind) {
  const ParameterSet& set = parameter_set("power_gas");
  CalibrationResult r;
  r.kind = kind;
  r.assets = set.assets;
  r.market = set.market;
  r.marginals = set.marginals;
  for (int j = 0; j < 2; ++j) r.marginal_fits[j].params = set.marginals[j];
  r.dependence = set.spec(kind).dependence();
  r.dependence_fit.dependence = r.dependence;
  r.rho_model = model_correlation(set.spec(kind));
  r.rho_market = set.rho_market;
  const std::string path = (dir / "calibration.json").string();
  save_calibration(r, path);
  return path;
}

std::vector<std::vector<double>> read_prices(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "K,mc_price,mc_stderr,fourier_price,gap");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(Config, ParseAndOverride) {
  const RunConfig c = parse_config(
      "# comment\n"
      "model = bbsd\n"
      "quotes = \"data/q.csv\"  # trailing\n"
      "F0.DE_POWER = 52\n"
      "pin.a = 0.5\n"
      "paths = 20000\n"
      "strikes = 1, 2.5, 4\n"
      "set.sigma1 = 0.3\n");
  EXPECT_EQ(c.model, ModelKind::BBSD);
  EXPECT_EQ(c.quotes_path, "data/q.csv");
  EXPECT_EQ(c.F0.at("DE_POWER"), 52.0);
  EXPECT_EQ(c.pinned.at("a"), 0.5);
  EXPECT_EQ(c.n_paths, 20000u);
  EXPECT_EQ(c.strikes, (std::vector<double>{1.0, 2.5, 4.0}));
  EXPECT_EQ(c.overrides.at("sigma1"), 0.3);
  EXPECT_EQ(c.resolved_calibration_path(), "out/calibration.json");

  RunConfig d = c;
  apply_setting(d, "model", "SSD");
  apply_setting(d, "seed", "5");
  EXPECT_EQ(d.model, ModelKind::SSD);
  EXPECT_EQ(d.seed, 5u);
  EXPECT_NE(canonical_config(c), canonical_config(d));
  EXPECT_EQ(parse_config(canonical_config(c)).n_paths, c.n_paths);
  EXPECT_EQ(canonical_config(parse_config(canonical_config(c))), canonical_config(c));
}

TEST(Config, Errors) {
  RunConfig c;
  EXPECT_THROW(apply_setting(c, "paths", "0"), ParseError);
  EXPECT_THROW(apply_setting(c, "paths", "999"), ParseError);
  EXPECT_THROW(apply_setting(c, "no_such_key", "1"), ParseError);
  EXPECT_THROW(apply_setting(c, "r", "abc"), ParseError);
  EXPECT_THROW(apply_setting(c, "model", "heston"), ParseError);
  EXPECT_THROW(apply_setting(c, "set.bogus", "1"), ParseError);
  EXPECT_THROW(parse_config("just a line without equals\n"), ParseError);
  try {
    parse_config("seed = 1\nfft_points = x\n", "run.toml");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("run.toml:2"), std::string::npos) << e.what();
  }
}

TEST(Config, Hash) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Commands, MissingQuotesIsParseError) {
  const fs::path dir = scratch("missing");
  RunConfig c;
  c.out_dir = dir.string();
  c.quotes_path = (dir / "nope.csv").string();
  c.history_path = (dir / "nope_history.csv").string();
  std::ostringstream log, err;
  EXPECT_EQ(run_command("calibrate", c, log, err), kParse);
  EXPECT_NE(err.str().find("nope.csv"), std::string::npos);
  EXPECT_EQ(run_command("frobnicate", c, log, err), kParse);
}

TEST(Commands, PriceDeterministicAndMonotone) {
  const fs::path dir = scratch("price");
  bundled_artifact(dir, ModelKind::BBSD);
  RunConfig c;
  c.out_dir = dir.string();
  c.n_paths = 20000;
  c.seed = 11;
  std::ostringstream log, err;
  ASSERT_EQ(run_command("price", c, log, err), kOk) << err.str();
  const std::string first = slurp(dir / "prices.csv");
  ASSERT_EQ(run_command("price", c, log, err), kOk);
  EXPECT_EQ(first, slurp(dir / "prices.csv"));
  const auto rows = read_prices(dir / "prices.csv");
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows.front()[0], 24.0);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(rows[i][1], rows[i - 1][1]);
    EXPECT_LT(rows[i][3], rows[i - 1][3]);
  }
  const std::string manifest = slurp(dir / "manifest.json");
  EXPECT_NE(manifest.find("\"config_hash\""), std::string::npos);
  EXPECT_NE(manifest.find("\"seed\": 11"), std::string::npos) << manifest;

  c.strikes = {-1.0};
  EXPECT_EQ(run_command("price", c, log, err), kParse);
}

TEST(Commands, SimulateWritesPaths) {
  const fs::path dir = scratch("simulate");
  bundled_artifact(dir, ModelKind::LSSD);
  RunConfig c;
  c.out_dir = dir.string();
  c.n_paths = 2000;
  c.steps = 4;
  std::ostringstream log, err;
  ASSERT_EQ(run_command("simulate", c, log, err), kOk) << err.str();
  const PathBatch b = read_path_batch((dir / "paths.bin").string());
  EXPECT_EQ(b.label, PathLabel::Forward);
  EXPECT_EQ(b.n_paths(), 2000);
  EXPECT_EQ(b.n_times(), 5);
  EXPECT_DOUBLE_EQ(b.values[0](0, 0), 45.0);
  EXPECT_TRUE(fs::exists(dir / "subordinators.csv"));
  EXPECT_NE(slurp(dir / "report.txt").find("rho"), std::string::npos);
}

TEST(Commands, CalibrateSyntheticSsdReportsShortfall) {
  const fs::path dir = scratch("calibrate");
  RunConfig s;
  s.out_dir = dir.string();
  std::ostringstream log, err;
  ASSERT_EQ(run_command("synth", s, log, err), kOk) << err.str();
  RunConfig c = load_config((dir / "run.toml").string());
  c.out_dir = dir.string();
  c.model = ModelKind::SSD;
  c.target_rho = 0.94;
  ASSERT_EQ(run_command("calibrate", c, log, err), kOk) << err.str();
  const std::string report = slurp(dir / "report.txt");
  EXPECT_NE(report.find("shortfall yes"), std::string::npos) << report;
  const CalibrationResult r = load_calibration((dir / "calibration.json").string());
  EXPECT_TRUE(r.dependence_fit.shortfall);
  EXPECT_LT(r.rho_model, 0.1);
  for (int j = 0; j < 2; ++j) EXPECT_LT(r.marginal_fits[j].rmse, 1e-6);

  // With a pinned at 0.5 the BBSD correlation cannot exceed about 0.5, so
  // the target is set below that cap.
  c.model = ModelKind::BBSD;
  c.target_rho = 0.4;
  c.pinned["a"] = 0.5;
  ASSERT_EQ(run_command("calibrate", c, log, err), kOk) << err.str();
  const CalibrationResult b = load_calibration((dir / "calibration.json").string());
  EXPECT_EQ(std::get<BBSDDependence>(b.dependence).a, 0.5);
  EXPECT_FALSE(b.dependence_fit.shortfall);
  EXPECT_NEAR(b.rho_model, b.rho_market, 1e-3);
}

TEST(Tool, ExitCodes) {
  const fs::path dir = scratch("tool");
  const std::string out = " --out " + dir.string();
  EXPECT_EQ(run_tool("calibrate" + out + " --set quotes=" + (dir / "missing.csv").string() +
                     " --set history=" + (dir / "missing_h.csv").string()),
            2);
  EXPECT_EQ(run_tool("simulate --paths 0" + out), 2);
  EXPECT_EQ(run_tool("validate --set set.a=1.5" + out), 3);
  EXPECT_EQ(run_tool("nonsense"), 2);
  EXPECT_EQ(run_tool("synth" + out), 0);
  EXPECT_TRUE(fs::exists(dir / "quotes.csv"));
}
