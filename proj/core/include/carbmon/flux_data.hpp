#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace carbmon {

// One year of global carbon-budget fluxes, GtC/yr.
struct FluxRecord {
  int year = 0;
  double e_ff = 0.0;   // fossil-fuel emissions (incl. cement production)
  double e_luc = 0.0;  // land-use-change emissions
  double g_atm = 0.0;  // atmospheric growth
  double s_ocn = 0.0;  // ocean sink
  double s_lnd = 0.0;  // land sink
  double s_cem = 0.0;  // cement carbonation sink (optional column; defaults 0)

  friend bool operator==(const FluxRecord&, const FluxRecord&) = default;
};

// An annual data release. Immutable after construction; a revised release is
// a new Vintage, never a mutation of an old one. Years are strictly
// consecutive and the first year is 1959, the start of the record.
class Vintage {
 public:
  static Vintage from_records(std::string label, std::vector<FluxRecord> records);

  const std::string& label() const noexcept { return label_; }
  const std::vector<FluxRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  int first_year() const noexcept { return records_.front().year; }
  int last_year() const noexcept { return records_.back().year; }

  friend bool operator==(const Vintage&, const Vintage&) = default;

 private:
  Vintage() = default;
  std::string label_;
  std::vector<FluxRecord> records_;
};

struct BudgetImbalanceSeries {
  std::string label;
  std::vector<int> years;
  std::vector<double> values;
};

// Parses the CSV vintage format: header
//   year,e_ff,e_luc,g_atm,s_ocn,s_lnd[,s_cem]
// then one row per year, '.' decimal point, no thousands separators.
// Errors: MissingColumn, EmptyData, MalformedNumber, NonConsecutiveYears,
// InvalidYear.
Vintage parse_vintage(std::string_view text, std::string label);
Vintage parse_vintage(std::istream& in, std::string label);

// Reads a vintage from disk; the label defaults to the file stem.
Vintage load_vintage(const std::filesystem::path& file, std::string label = {});

// Writes the CSV format back out with round-trip-exact decimals, so
// parse_vintage(serialize_vintage(v), v.label()) == v.
void serialize_vintage(const Vintage& v, std::ostream& out);
std::string serialize_vintage(const Vintage& v);

// Residual closing the budget identity, per year:
//   (e_ff - s_cem) + e_luc - g_atm - s_ocn - s_lnd
// The cement carbonation sink is folded into fossil emissions by subtraction
// and never carried as a separate term downstream.
BudgetImbalanceSeries budget_imbalance(const Vintage& v);

}  // namespace carbmon
