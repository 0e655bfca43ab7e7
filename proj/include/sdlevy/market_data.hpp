#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sdlevy/calibration.hpp"
#include "sdlevy/errors.hpp"
#include "sdlevy/parameter_sets.hpp"

namespace sdlevy {

// A serialized artifact carries a version this build cannot read.
class VersionMismatchError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// ISO-8601 calendar date (YYYY-MM-DD) as a day count since 1970-01-01.
/// Throws ParseError on malformed or impossible dates.
std::int64_t parse_iso_date(const std::string& text);
std::string format_iso_date(std::int64_t days);

struct QuoteSet {
  std::string valuation_date;
  std::vector<OptionQuote> quotes;
  std::map<std::string, double> F0;
  double r = 0.0;

  /// Assets in order of first appearance.
  std::vector<std::string> assets() const;
  std::vector<OptionQuote> quotes_for(const std::string& asset) const;
};

struct QuoteLoadOptions {
  // Forward level per asset id; every quoted asset needs an entry.
  std::map<std::string, double> F0;
  double r = 0.0;
  // Keep strikes with |K - F0| <= strike_window.
  double strike_window = 10.0;
};

/// Reads `date,asset,expiry,strike,price` rows. T is ACT/365 from date to
/// expiry. Errors name the line and field.
QuoteSet load_option_quotes(const std::string& path, const QuoteLoadOptions& options);
QuoteSet parse_option_quotes(std::istream& in, const QuoteLoadOptions& options,
                             const std::string& source = "<stream>");
void write_option_quotes(const QuoteSet& set, const std::string& path);

struct ForwardHistory {
  std::vector<std::string> dates;
  std::array<std::string, 2> assets;
  std::array<std::vector<double>, 2> prices;

  std::size_t size() const { return dates.size(); }
};

/// Reads `date,<asset1>,<asset2>` rows with strictly increasing dates.
ForwardHistory load_forward_history(const std::string& path);
ForwardHistory parse_forward_history(std::istream& in, const std::string& source = "<stream>");
void write_forward_history(const ForwardHistory& history, const std::string& path);

std::string calibration_to_json(const CalibrationResult& result);
/// Throws VersionMismatchError or ParseError naming the offending field.
CalibrationResult calibration_from_json(const std::string& text);
void save_calibration(const CalibrationResult& result, const std::string& path);
CalibrationResult load_calibration(const std::string& path);

struct SyntheticOptions {
  std::uint64_t seed = 7;
  std::string valuation_date = "2018-11-12";
  // Strikes F0 + k * strike_step for |k| <= strikes_each_side.
  int strikes_each_side = 4;
  double strike_step = 2.5;
  // Multiplicative N(0, noise^2) perturbation of quoted premia.
  double noise = 0.0;
  std::size_t history_days = 400;
};

struct SyntheticDataset {
  QuoteSet quotes;
  ForwardHistory history;
};

/// Quotes priced from the set's marginals on the FFT lattice, and a daily
/// forward history with Gaussian log-returns correlated at the set's
/// historical correlation.
SyntheticDataset generate_synthetic_dataset(const ParameterSet& set,
                                            const SyntheticOptions& options = {});

}  // namespace sdlevy
