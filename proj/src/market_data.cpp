#include "sdlevy/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "sdlevy/sampling.hpp"

namespace sdlevy {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

// Prefix "source:line: field 'name'" for every row diagnostic.
std::string where(const std::string& source, std::size_t line, const std::string& field) {
  std::ostringstream os;
  os << source << ':' << line << ": field '" << field << "'";
  return os.str();
}

double parse_number(const std::string& cell, const std::string& source, std::size_t line,
                    const std::string& field) {
  if (cell.empty()) throw ParseError(where(source, line, field) + " is empty");
  double value = 0.0;
  const char* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError(where(source, line, field) + " is not a number: '" + cell + "'");
  }
  return value;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

// Reads the header line, skipping a UTF-8 byte order mark.
std::string read_header(std::istream& in, const std::string& source) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError(source + ": empty file");
  if (header.rfind("\xEF\xBB\xBF", 0) == 0) header.erase(0, 3);
  return trim(header);
}

// Shortest text that reads back to the same double.
std::string fmt(double x) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

}  // namespace

std::int64_t parse_iso_date(const std::string& text) {
  using namespace std::chrono;
  const auto bad = [&] { return ParseError("invalid ISO-8601 date '" + text + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  int parts[3] = {0, 0, 0};
  const int offsets[3][2] = {{0, 4}, {5, 2}, {8, 2}};
  for (int i = 0; i < 3; ++i) {
    const char* b = text.data() + offsets[i][0];
    const char* e = b + offsets[i][1];
    const auto [ptr, ec] = std::from_chars(b, e, parts[i]);
    if (ec != std::errc() || ptr != e) throw bad();
  }
  const year_month_day ymd{year{parts[0]}, month{static_cast<unsigned>(parts[1])},
                           day{static_cast<unsigned>(parts[2])}};
  if (!ymd.ok()) throw bad();
  return sys_days{ymd}.time_since_epoch().count();
}

std::string format_iso_date(std::int64_t days) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::vector<std::string> QuoteSet::assets() const {
  std::vector<std::string> out;
  for (const auto& q : quotes) {
    if (std::find(out.begin(), out.end(), q.asset) == out.end()) out.push_back(q.asset);
  }
  return out;
}

std::vector<OptionQuote> QuoteSet::quotes_for(const std::string& asset) const {
  std::vector<OptionQuote> out;
  std::copy_if(quotes.begin(), quotes.end(), std::back_inserter(out),
               [&](const OptionQuote& q) { return q.asset == asset; });
  return out;
}

QuoteSet parse_option_quotes(std::istream& in, const QuoteLoadOptions& options,
                             const std::string& source) {
  static const std::string kHeader = "date,asset,expiry,strike,price";
  const std::string header = read_header(in, source);
  if (header != kHeader) {
    throw ParseError(source + ":1: expected header '" + kHeader + "', found '" + header + "'");
  }
  if (!(options.strike_window > 0.0)) throw ParseError("quote loader: strike window must be positive");

  QuoteSet set;
  set.r = options.r;
  std::int64_t valuation = 0;
  std::size_t line_no = 1;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 5) {
      std::ostringstream os;
      os << source << ':' << line_no << ": expected 5 fields, found " << cells.size();
      throw ParseError(os.str());
    }
    const auto date_of = [&](const std::string& cell, const std::string& field) {
      try {
        return parse_iso_date(cell);
      } catch (const ParseError& e) {
        throw ParseError(where(source, line_no, field) + ": " + e.what());
      }
    };
    const std::int64_t date = date_of(cells[0], "date");
    if (set.valuation_date.empty()) {
      set.valuation_date = cells[0];
      valuation = date;
    } else if (date != valuation) {
      throw ParseError(where(source, line_no, "date") + " differs from the valuation date " +
                       set.valuation_date);
    }
    const std::string& asset = cells[1];
    if (asset.empty()) throw ParseError(where(source, line_no, "asset") + " is empty");
    const auto f = options.F0.find(asset);
    if (f == options.F0.end()) {
      throw ParseError(where(source, line_no, "asset") + ": no forward level F0 given for '" +
                       asset + "'");
    }
    const std::int64_t expiry = date_of(cells[2], "expiry");
    if (expiry <= date) throw ParseError(where(source, line_no, "expiry") + " must be after date");
    const double K = parse_number(cells[3], source, line_no, "strike");
    if (!(K > 0.0)) throw ParseError(where(source, line_no, "strike") + " must be > 0");
    const double price = parse_number(cells[4], source, line_no, "price");
    if (!(price > 0.0)) throw ParseError(where(source, line_no, "price") + " must be > 0");

    set.F0[asset] = f->second;
    if (std::abs(K - f->second) > options.strike_window) continue;
    set.quotes.push_back({asset, static_cast<double>(expiry - date) / 365.0, K, price});
  }
  if (set.quotes.empty()) throw ParseError(source + ": no quotes left after the strike window filter");
  return set;
}

QuoteSet load_option_quotes(const std::string& path, const QuoteLoadOptions& options) {
  auto in = open_input(path);
  return parse_option_quotes(in, options, path);
}

void write_option_quotes(const QuoteSet& set, const std::string& path) {
  auto out = open_output(path);
  const std::int64_t valuation = parse_iso_date(set.valuation_date);
  out << "date,asset,expiry,strike,price\n";
  for (const auto& q : set.quotes) {
    const auto expiry = valuation + static_cast<std::int64_t>(std::llround(q.T * 365.0));
    out << set.valuation_date << ',' << q.asset << ',' << format_iso_date(expiry) << ','
        << fmt(q.K) << ',' << fmt(q.price) << '\n';
  }
}

ForwardHistory parse_forward_history(std::istream& in, const std::string& source) {
  const auto header = split_csv(read_header(in, source));
  if (header.size() != 3 || header[0] != "date" || header[1].empty() || header[2].empty() ||
      header[1] == header[2]) {
    throw ParseError(source + ":1: expected header 'date,<asset1>,<asset2>' with two distinct assets");
  }
  ForwardHistory h;
  h.assets = {header[1], header[2]};
  std::int64_t previous = 0;
  std::size_t line_no = 1;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 3) {
      std::ostringstream os;
      os << source << ':' << line_no << ": expected 3 fields, found " << cells.size();
      throw ParseError(os.str());
    }
    std::int64_t date = 0;
    try {
      date = parse_iso_date(cells[0]);
    } catch (const ParseError& e) {
      throw ParseError(where(source, line_no, "date") + ": " + e.what());
    }
    if (!h.dates.empty() && date <= previous) {
      throw ParseError(where(source, line_no, "date") + ": " + cells[0] +
                       (date == previous ? " is a duplicate" : " is earlier than the previous row"));
    }
    previous = date;
    for (int j = 0; j < 2; ++j) {
      const double p = parse_number(cells[j + 1], source, line_no, h.assets[j]);
      if (!(p > 0.0)) throw ParseError(where(source, line_no, h.assets[j]) + " must be > 0");
      h.prices[j].push_back(p);
    }
    h.dates.push_back(cells[0]);
  }
  if (h.dates.empty()) throw ParseError(source + ": no history rows");
  return h;
}

ForwardHistory load_forward_history(const std::string& path) {
  auto in = open_input(path);
  return parse_forward_history(in, path);
}

void write_forward_history(const ForwardHistory& h, const std::string& path) {
  auto out = open_output(path);
  out << "date," << h.assets[0] << ',' << h.assets[1] << '\n';
  for (std::size_t k = 0; k < h.size(); ++k) {
    out << h.dates[k] << ',' << fmt(h.prices[0][k]) << ',' << fmt(h.prices[1][k]) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Calibration artifact

namespace {

constexpr const char* kArtifactKind = "sdlevy.calibration";

const json& field(const json& j, const char* name, const std::string& path) {
  if (!j.is_object() || !j.contains(name)) {
    throw ParseError("calibration artifact: missing field '" + path + name + "'");
  }
  return j.at(name);
}

template <class T>
T get(const json& j, const char* name, const std::string& path = "") {
  const json& v = field(j, name, path);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ParseError("calibration artifact: field '" + path + name + "' has the wrong type");
  }
}

json marginal_json(const VGMarginal& m) {
  return {{"mu", m.mu}, {"sigma", m.sigma}, {"alpha", m.alpha}};
}

VGMarginal marginal_from(const json& j, const std::string& path) {
  return {get<double>(j, "mu", path), get<double>(j, "sigma", path), get<double>(j, "alpha", path)};
}

json dependence_json(const Dependence& d) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, SSDDependence>) {
          return {{"A", x.A}, {"B", x.B}, {"a", x.a}};
        } else if constexpr (std::is_same_v<T, LSSDDependence>) {
          return {{"A", x.A}, {"B", x.B}, {"a", x.a}, {"rho", x.rho}};
        } else {
          return {{"a1", x.a1}, {"a2", x.a2}, {"a", x.a}, {"nuR", x.nuR}};
        }
      },
      d);
}

Dependence dependence_from(ModelKind kind, const json& j, const std::string& path) {
  switch (kind) {
    case ModelKind::SSD:
      return SSDDependence{get<double>(j, "A", path), get<double>(j, "B", path),
                           get<double>(j, "a", path)};
    case ModelKind::LSSD:
      return LSSDDependence{get<double>(j, "A", path), get<double>(j, "B", path),
                            get<double>(j, "a", path), get<double>(j, "rho", path)};
    case ModelKind::BBSD:
      return BBSDDependence{get<double>(j, "a1", path), get<double>(j, "a2", path),
                            get<double>(j, "a", path), get<double>(j, "nuR", path)};
  }
  throw ParseError("calibration artifact: unknown model");
}

json marginal_fit_json(const MarginalFit& f) {
  json errors = json::array();
  for (const auto& e : f.errors) {
    errors.push_back({{"T", e.T}, {"K", e.K}, {"market", e.market}, {"model", e.model},
                      {"error", e.error}});
  }
  return {{"params", marginal_json(f.params)}, {"objective", f.objective}, {"rmse", f.rmse},
          {"starts", f.starts},   {"iterations", f.iterations}, {"converged", f.converged},
          {"boundary", f.boundary}, {"errors", errors}};
}

MarginalFit marginal_fit_from(const json& j, const std::string& path) {
  MarginalFit f;
  f.params = marginal_from(field(j, "params", path), path + "params.");
  f.objective = get<double>(j, "objective", path);
  f.rmse = get<double>(j, "rmse", path);
  f.starts = get<int>(j, "starts", path);
  f.iterations = get<int>(j, "iterations", path);
  f.converged = get<bool>(j, "converged", path);
  f.boundary = get<bool>(j, "boundary", path);
  const json& errors = field(j, "errors", path);
  if (!errors.is_array()) throw ParseError("calibration artifact: field '" + path + "errors' must be an array");
  for (const auto& e : errors) {
    const std::string p = path + "errors[].";
    f.errors.push_back({get<double>(e, "T", p), get<double>(e, "K", p), get<double>(e, "market", p),
                        get<double>(e, "model", p), get<double>(e, "error", p)});
  }
  return f;
}

}  // namespace

std::string calibration_to_json(const CalibrationResult& r) {
  json near = json::array();
  for (const auto& d : r.dependence_fit.near_optimal) near.push_back(dependence_json(d));
  const auto& df = r.dependence_fit;
  json doc = {
      {"artifact", kArtifactKind},
      {"version", r.version},
      {"model", std::string(to_string(r.kind))},
      {"assets", {r.assets[0], r.assets[1]}},
      {"market", {{"F0", {r.market.F0[0], r.market.F0[1]}}, {"r", r.market.r}, {"T", r.market.T}}},
      {"marginals", {marginal_json(r.marginals[0]), marginal_json(r.marginals[1])}},
      {"marginal_fits", {marginal_fit_json(r.marginal_fits[0]), marginal_fit_json(r.marginal_fits[1])}},
      {"dependence", dependence_json(r.dependence)},
      {"dependence_fit",
       {{"dependence", dependence_json(df.dependence)},
        {"rho_model", df.rho_model},
        {"rho_target", df.rho_target},
        {"objective", df.objective},
        {"objective_at_init", df.objective_at_init},
        {"shortfall", df.shortfall},
        {"max_attainable", df.max_attainable},
        {"near_optimal", near},
        {"starts", df.starts},
        {"iterations", df.iterations},
        {"converged", df.converged}}},
      {"rho_model", r.rho_model},
      {"rho_market", r.rho_market},
  };
  return doc.dump(2) + "\n";
}

CalibrationResult calibration_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("calibration artifact: invalid JSON: ") + e.what());
  }
  if (get<std::string>(doc, "artifact") != kArtifactKind) {
    throw ParseError("calibration artifact: field 'artifact' is not '" + std::string(kArtifactKind) + "'");
  }
  const auto version = get<std::string>(doc, "version");
  if (version != kArtifactVersion) {
    throw VersionMismatchError("calibration artifact: version " + version + " is not supported (expected " +
                               kArtifactVersion + ")");
  }
  CalibrationResult r;
  r.version = version;
  try {
    r.kind = parse_model_kind(get<std::string>(doc, "model"));
  } catch (const ParseError& e) {
    throw ParseError(std::string("calibration artifact: field 'model': ") + e.what());
  }
  const auto pair_of = [&](const char* name) {
    const json& v = field(doc, name, "");
    if (!v.is_array() || v.size() != 2) {
      throw ParseError(std::string("calibration artifact: field '") + name + "' must hold two entries");
    }
    return v;
  };
  const json assets = pair_of("assets");
  const json marginals = pair_of("marginals");
  const json fits = pair_of("marginal_fits");
  for (int j = 0; j < 2; ++j) {
    const std::string idx = "[" + std::to_string(j) + "].";
    if (!assets[j].is_string()) throw ParseError("calibration artifact: field 'assets' must hold strings");
    r.assets[j] = assets[j].get<std::string>();
    r.marginals[j] = marginal_from(marginals[j], "marginals" + idx);
    r.marginal_fits[j] = marginal_fit_from(fits[j], "marginal_fits" + idx);
  }
  const json& market = field(doc, "market", "");
  const auto F0 = get<std::vector<double>>(market, "F0", "market.");
  if (F0.size() != 2) throw ParseError("calibration artifact: field 'market.F0' must hold two entries");
  r.market = {{F0[0], F0[1]}, get<double>(market, "r", "market."), get<double>(market, "T", "market.")};
  r.dependence = dependence_from(r.kind, field(doc, "dependence", ""), "dependence.");

  const json& df = field(doc, "dependence_fit", "");
  const std::string p = "dependence_fit.";
  auto& fit = r.dependence_fit;
  fit.dependence = dependence_from(r.kind, field(df, "dependence", p), p + "dependence.");
  fit.rho_model = get<double>(df, "rho_model", p);
  fit.rho_target = get<double>(df, "rho_target", p);
  fit.objective = get<double>(df, "objective", p);
  fit.objective_at_init = get<double>(df, "objective_at_init", p);
  fit.shortfall = get<bool>(df, "shortfall", p);
  fit.max_attainable = get<double>(df, "max_attainable", p);
  for (const auto& d : field(df, "near_optimal", p)) {
    fit.near_optimal.push_back(dependence_from(r.kind, d, p + "near_optimal[]."));
  }
  fit.starts = get<int>(df, "starts", p);
  fit.iterations = get<int>(df, "iterations", p);
  fit.converged = get<bool>(df, "converged", p);
  r.rho_model = get<double>(doc, "rho_model");
  r.rho_market = get<double>(doc, "rho_market");
  return r;
}

void save_calibration(const CalibrationResult& result, const std::string& path) {
  auto out = open_output(path);
  out << calibration_to_json(result);
  if (!out) throw Error("failed writing '" + path + "'");
}

CalibrationResult load_calibration(const std::string& path) {
  auto in = open_input(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return calibration_from_json(buffer.str());
}

// ---------------------------------------------------------------------------
// Synthetic data

SyntheticDataset generate_synthetic_dataset(const ParameterSet& set, const SyntheticOptions& opt) {
  if (opt.strikes_each_side < 1 || !(opt.strike_step > 0.0)) {
    throw DomainError("synthetic dataset: need at least one strike step on each side");
  }
  if (opt.history_days < 3) throw DomainError("synthetic dataset: history needs at least 3 days");
  RngStream rng(opt.seed, 0);
  SyntheticDataset data;
  data.quotes.valuation_date = opt.valuation_date;
  data.quotes.r = set.market.r;

  // Premia are quoted for expiries on whole days.
  const double T = static_cast<double>(std::llround(set.market.T * 365.0)) / 365.0;
  for (int j = 0; j < 2; ++j) {
    const double F0 = set.market.F0[j];
    data.quotes.F0[set.assets[j]] = F0;
    std::vector<double> strikes;
    for (int k = -opt.strikes_each_side; k <= opt.strikes_each_side; ++k) {
      strikes.push_back(F0 + opt.strike_step * k);
    }
    const auto prices = carr_madan_calls(set.marginals[j], VanillaFrame{F0, set.market.r, T}, strikes);
    for (std::size_t i = 0; i < strikes.size(); ++i) {
      const double bump = opt.noise > 0.0 ? std::exp(opt.noise * rng.normal()) : 1.0;
      data.quotes.quotes.push_back({set.assets[j], T, strikes[i], prices[i].price * bump});
    }
  }

  // Daily history ending on the valuation date.
  auto& h = data.history;
  h.assets = set.assets;
  const double dt = 1.0 / 365.0;
  const double rho = set.rho_market;
  std::array<double, 2> vol{};
  for (int j = 0; j < 2; ++j) {
    const auto& m = set.marginals[j];
    vol[j] = std::sqrt(m.sigma * m.sigma + m.mu * m.mu * m.alpha);
  }
  const std::int64_t end = parse_iso_date(opt.valuation_date);
  const std::size_t n = opt.history_days;
  std::array<double, 2> logp{std::log(set.market.F0[0]), std::log(set.market.F0[1])};
  for (int j = 0; j < 2; ++j) h.prices[j].resize(n);
  h.dates.resize(n);
  for (std::size_t k = n; k-- > 0;) {
    h.dates[k] = format_iso_date(end - static_cast<std::int64_t>(n - 1 - k));
    h.prices[0][k] = std::exp(logp[0]);
    h.prices[1][k] = std::exp(logp[1]);
    // Walk backwards: the step into day k is subtracted.
    const double z1 = rng.normal();
    const double z2 = rho * z1 + std::sqrt(1.0 - rho * rho) * rng.normal();
    logp[0] -= vol[0] * std::sqrt(dt) * z1;
    logp[1] -= vol[1] * std::sqrt(dt) * z2;
  }
  return data;
}

}  // namespace sdlevy
