#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sdlevy/cli.hpp"
#include "sdlevy/errors.hpp"

namespace sdlevy::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

double to_double(const std::string& v, const std::string& key, const std::string& where) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(x)) {
    throw ParseError(where + ": '" + key + "' expects a number, got '" + v + "'");
  }
  return x;
}

std::uint64_t to_u64(const std::string& v, const std::string& key, const std::string& where) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ParseError(where + ": '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return x;
}

bool to_bool(const std::string& v, const std::string& key, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError(where + ": '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<double> to_list(std::string v, const std::string& key, const std::string& where) {
  if (v.size() >= 2 && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(item, key, where));
  }
  return out;
}

bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

const char* kOverrideKeys[] = {"mu1", "sigma1", "alpha1", "mu2", "sigma2", "alpha2", "A",
                               "B",   "a",      "rho",    "a1",  "a2",     "nuR"};

// Shortest text that reads back to the same double.
std::string fmt(double x) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

}  // namespace

std::string RunConfig::resolved_calibration_path() const {
  return calibration_path.empty() ? out_dir + "/calibration.json" : calibration_path;
}

void apply_setting(RunConfig& c, const std::string& raw_key, const std::string& raw_value,
                   const std::string& where) {
  const std::string key = trim(raw_key);
  const std::string value = unquote(trim(raw_value));
  if (key == "model") {
    c.model = parse_model_kind(value);
  } else if (key == "parameter_set") {
    c.parameter_set = value;
  } else if (key == "quotes") {
    c.quotes_path = value;
  } else if (key == "history") {
    c.history_path = value;
  } else if (key == "calibration") {
    c.calibration_path = value;
  } else if (key == "out") {
    c.out_dir = value;
  } else if (key == "r") {
    c.r = to_double(value, key, where);
  } else if (starts_with(key, "F0.")) {
    const double f = to_double(value, key, where);
    if (!(f > 0.0)) throw ParseError(where + ": '" + key + "' must be positive");
    c.F0[key.substr(3)] = f;
  } else if (key == "strike_window") {
    c.strike_window = to_double(value, key, where);
  } else if (key == "target_rho") {
    c.target_rho = to_double(value, key, where);
  } else if (key == "relative_errors") {
    c.relative_errors = to_bool(value, key, where);
  } else if (starts_with(key, "pin.")) {
    c.pinned[key.substr(4)] = to_double(value, key, where);
  } else if (key == "seed") {
    c.seed = to_u64(value, key, where);
  } else if (key == "paths") {
    const auto n = to_u64(value, key, where);
    if (n < 1000) throw ParseError(where + ": 'paths' must be at least 1000, got " + value);
    c.n_paths = n;
  } else if (key == "antithetic") {
    c.antithetic = to_bool(value, key, where);
  } else if (key == "fft_points") {
    c.vanilla_grid.n_points = to_u64(value, key, where);
  } else if (key == "fft_eta") {
    c.vanilla_grid.eta = to_double(value, key, where);
  } else if (key == "fft_damping") {
    c.vanilla_grid.damping = to_double(value, key, where);
  } else if (key == "spread_points") {
    c.spread_grid.n_points = to_u64(value, key, where);
  } else if (key == "spread_eta") {
    c.spread_grid.eta = to_double(value, key, where);
  } else if (key == "spread_damping") {
    c.spread_grid.damping = to_double(value, key, where);
  } else if (key == "strikes") {
    c.strikes = to_list(value, key, where);
  } else if (key == "maturity") {
    c.maturity = to_double(value, key, where);
  } else if (key == "steps") {
    const auto n = to_u64(value, key, where);
    if (n < 1) throw ParseError(where + ": 'steps' must be at least 1");
    c.steps = n;
  } else if (key == "a_values") {
    c.a_values = to_list(value, key, where);
  } else if (key == "noise") {
    c.noise = to_double(value, key, where);
  } else if (starts_with(key, "set.")) {
    const std::string name = key.substr(4);
    if (std::find(std::begin(kOverrideKeys), std::end(kOverrideKeys), name) == std::end(kOverrideKeys)) {
      throw ParseError(where + ": unknown model parameter '" + name + "'");
    }
    c.overrides[name] = to_double(value, key, where);
  } else {
    throw ParseError(where + ": unknown setting '" + key + "'");
  }
  try {
    c.vanilla_grid.check();
    c.spread_grid.check();
  } catch (const std::invalid_argument& e) {
    throw ParseError(where + ": " + e.what());
  }
}

RunConfig parse_config(const std::string& text, const std::string& source, RunConfig base) {
  std::stringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // A '#' inside quotes is kept.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(where + ": expected 'key = value'");
    apply_setting(base, line.substr(0, eq), line.substr(eq + 1), where);
  }
  return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path, std::move(base));
}

std::string canonical_config(const RunConfig& c) {
  std::ostringstream os;
  const auto list = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
    return s;
  };
  os << "model = " << to_string(c.model) << '\n'
     << "parameter_set = " << c.parameter_set << '\n'
     << "quotes = " << c.quotes_path << '\n'
     << "history = " << c.history_path << '\n'
     << "calibration = " << c.calibration_path << '\n'
     << "out = " << c.out_dir << '\n'
     << "r = " << fmt(c.r) << '\n';
  for (const auto& [asset, f] : c.F0) os << "F0." << asset << " = " << fmt(f) << '\n';
  os << "strike_window = " << fmt(c.strike_window) << '\n';
  if (c.target_rho) os << "target_rho = " << fmt(*c.target_rho) << '\n';
  os << "relative_errors = " << (c.relative_errors ? "true" : "false") << '\n';
  for (const auto& [name, v] : c.pinned) os << "pin." << name << " = " << fmt(v) << '\n';
  os << "seed = " << c.seed << '\n'
     << "paths = " << c.n_paths << '\n'
     << "antithetic = " << (c.antithetic ? "true" : "false") << '\n'
     << "fft_points = " << c.vanilla_grid.n_points << '\n'
     << "fft_eta = " << fmt(c.vanilla_grid.eta) << '\n'
     << "fft_damping = " << fmt(c.vanilla_grid.damping) << '\n'
     << "spread_points = " << c.spread_grid.n_points << '\n'
     << "spread_eta = " << fmt(c.spread_grid.eta) << '\n'
     << "spread_damping = " << fmt(c.spread_grid.damping) << '\n'
     << "strikes = " << list(c.strikes) << '\n';
  if (c.maturity) os << "maturity = " << fmt(*c.maturity) << '\n';
  os << "steps = " << c.steps << '\n' << "a_values = " << list(c.a_values) << '\n';
  for (const auto& [name, v] : c.overrides) os << "set." << name << " = " << fmt(v) << '\n';
  os << "noise = " << fmt(c.noise) << '\n';
  return os.str();
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace sdlevy::cli
