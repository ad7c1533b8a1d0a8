#include "carbmon/flux_data.hpp"

#include <fstream>
#include <sstream>
#include <utility>

#include "carbmon/errors.hpp"
#include "detail/text.hpp"

namespace carbmon {

namespace {

constexpr int kEarliestYear = 1959;
constexpr std::string_view kHeader = "year,e_ff,e_luc,g_atm,s_ocn,s_lnd";
constexpr std::string_view kHeaderCement = "year,e_ff,e_luc,g_atm,s_ocn,s_lnd,s_cem";

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

void validate_records(const std::vector<FluxRecord>& records) {
  if (records.empty()) raise(errc::empty_data, "vintage has no rows");
  if (records.front().year != kEarliestYear) {
    raise(errc::invalid_year,
          "vintage must begin in " + std::to_string(kEarliestYear) +
              ", got " + std::to_string(records.front().year));
  }
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].year != records[i - 1].year + 1) {
      raise(errc::non_consecutive_years,
            "year " + std::to_string(records[i].year) + " follows " +
                std::to_string(records[i - 1].year));
    }
  }
}

}  // namespace

Vintage Vintage::from_records(std::string label,
                              std::vector<FluxRecord> records) {
  validate_records(records);
  Vintage v;
  v.label_ = std::move(label);
  v.records_ = std::move(records);
  return v;
}

Vintage parse_vintage(std::string_view text, std::string label) {
  std::size_t pos = 0;
  bool saw_header = false;
  bool has_cement = false;
  std::vector<FluxRecord> records;
  int line_no = 0;

  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    line = detail::trim_cr(line);
    if (line.empty()) continue;

    if (!saw_header) {
      if (line == kHeaderCement) {
        has_cement = true;
      } else if (line != kHeader) {
        raise(errc::missing_column,
              "header must be '" + std::string(kHeader) +
                  "' with optional trailing ',s_cem'; got '" +
                  std::string(line) + "'");
      }
      saw_header = true;
      continue;
    }

    const auto fields = split_fields(line);
    const std::size_t expected = has_cement ? 7 : 6;
    if (fields.size() != expected) {
      raise(errc::missing_column,
            "line " + std::to_string(line_no) + " has " +
                std::to_string(fields.size()) + " fields, expected " +
                std::to_string(expected));
    }
    const std::string ctx = "line " + std::to_string(line_no);
    FluxRecord r;
    r.year = int(detail::parse_long(fields[0], errc::malformed_number, ctx));
    r.e_ff = detail::parse_double(fields[1], errc::malformed_number, ctx);
    r.e_luc = detail::parse_double(fields[2], errc::malformed_number, ctx);
    r.g_atm = detail::parse_double(fields[3], errc::malformed_number, ctx);
    r.s_ocn = detail::parse_double(fields[4], errc::malformed_number, ctx);
    r.s_lnd = detail::parse_double(fields[5], errc::malformed_number, ctx);
    if (has_cement) {
      r.s_cem = detail::parse_double(fields[6], errc::malformed_number, ctx);
    }
    records.push_back(r);
  }

  if (!saw_header) raise(errc::missing_column, "input has no header line");
  return Vintage::from_records(std::move(label), std::move(records));
}

Vintage parse_vintage(std::istream& in, std::string label) {
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_vintage(std::string_view(buf.str()), std::move(label));
}

Vintage load_vintage(const std::filesystem::path& file, std::string label) {
  std::ifstream in(file);
  if (!in) raise(errc::io_error, "cannot open '" + file.string() + "'");
  if (label.empty()) label = file.stem().string();
  return parse_vintage(in, std::move(label));
}

void serialize_vintage(const Vintage& v, std::ostream& out) {
  out << kHeaderCement << '\n';
  for (const FluxRecord& r : v.records()) {
    out << r.year << ',' << detail::round_trip(r.e_ff) << ','
        << detail::round_trip(r.e_luc) << ',' << detail::round_trip(r.g_atm)
        << ',' << detail::round_trip(r.s_ocn) << ','
        << detail::round_trip(r.s_lnd) << ',' << detail::round_trip(r.s_cem)
        << '\n';
  }
}

std::string serialize_vintage(const Vintage& v) {
  std::ostringstream out;
  serialize_vintage(v, out);
  return out.str();
}

BudgetImbalanceSeries budget_imbalance(const Vintage& v) {
  BudgetImbalanceSeries s;
  s.label = v.label();
  s.years.reserve(v.size());
  s.values.reserve(v.size());
  for (const FluxRecord& r : v.records()) {
    s.years.push_back(r.year);
    s.values.push_back((r.e_ff - r.s_cem) + r.e_luc - r.g_atm - r.s_ocn -
                       r.s_lnd);
  }
  return s;
}

}  // namespace carbmon
