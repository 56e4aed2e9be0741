#pragma once

#include <cctype>
#include <cmath>
#include <limits>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "depkde/errors.hpp"
#include "depkde/experiment.hpp"

namespace depkde {

//! Input file problem; `line` is 1-based (0 when not tied to a line).
class parse_error : public error {
 public:
  parse_error(const std::string& what, std::size_t line)
      : error(line ? "line " + std::to_string(line) + ": " + what : what),
        line(line) {}
  std::size_t line;
};

//! 17 significant digits, enough to round-trip any double.
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_real(const std::string& field, std::size_t line) {
  if (field == "nan" || field == "NA" || field.empty())
    return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &used);
  } catch (const std::exception&) {
    throw parse_error("not a number: '" + field + "'", line);
  }
  if (used != field.size())
    throw parse_error("trailing characters in '" + field + "'", line);
  return v;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

inline bool line_is_header(const std::string& field) {
  // a header is a bare identifier such as "x" or "value"
  if (field.empty()) return false;
  for (char c : field)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
          c == '-'))
      return false;
  return std::isalpha(static_cast<unsigned char>(field.front())) &&
         field != "nan" && field != "inf";
}

//! One real per line, or a single-column CSV with an optional header line.
//! Blank lines and '#' comments are skipped; file order is draw order.
inline std::vector<double> read_series(std::istream& in) {
  std::vector<double> out;
  std::string raw;
  std::size_t line = 0;
  bool seen_data = false;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = detail::trim(raw);
    if (s.empty() || s.front() == '#') continue;
    const auto fields = detail::split_csv(s);
    if (fields.size() != 1)
      throw parse_error("expected a single column", line);
    const std::string& f = fields.front();
    std::size_t used = 0;
    double v = 0.0;
    bool numeric = true;
    try {
      v = std::stod(f, &used);
    } catch (const std::exception&) {
      numeric = false;
    }
    if (!numeric || used != f.size()) {
      if (!seen_data && line_is_header(f)) {
        seen_data = true;
        continue;
      }
      throw parse_error("not a number: '" + f + "'", line);
    }
    if (!std::isfinite(v)) throw parse_error("non-finite value", line);
    seen_data = true;
    out.push_back(v);
  }
  if (out.size() < 2)
    throw parse_error("need at least 2 values, got " +
                          std::to_string(out.size()),
                      0);
  return out;
}

inline constexpr const char* records_header =
    "method,replicate,h,ise,zeta,acceptance,iat";

//! Provenance lines written as '# key=value' ahead of CSV content.
using Provenance = std::vector<std::pair<std::string, std::string>>;

inline void write_provenance(std::ostream& out, const Provenance& prov) {
  for (const auto& [k, v] : prov) out << "# " << k << '=' << v << '\n';
}

//! Raw per-replicate records. Failed methods are omitted here and reported
//! through the summary's failure column.
inline void write_records_csv(std::ostream& out,
                              const std::vector<MethodRecord>& records,
                              const Provenance& prov = {}) {
  write_provenance(out, prov);
  out << records_header << '\n';
  for (const auto& r : records) {
    if (!r.ok) continue;
    out << estimator_name(r.method) << ',' << r.replicate << ','
        << format_real(r.h) << ',' << format_real(r.ise) << ','
        << format_real(r.zeta) << ',' << format_real(r.acceptance) << ','
        << format_real(r.iat) << '\n';
  }
}

inline std::vector<MethodRecord> read_records_csv(std::istream& in) {
  std::vector<MethodRecord> out;
  std::string raw;
  std::size_t line = 0;
  bool header = false;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = detail::trim(raw);
    if (s.empty() || s.front() == '#') continue;
    if (!header) {
      if (s != records_header) throw parse_error("unexpected header", line);
      header = true;
      continue;
    }
    const auto f = detail::split_csv(s);
    if (f.size() != 7) throw parse_error("expected 7 columns", line);
    const auto method = parse_estimator(f[0]);
    if (!method) throw parse_error("unknown method '" + f[0] + "'", line);
    MethodRecord r;
    r.method = *method;
    r.replicate = static_cast<std::size_t>(parse_real(f[1], line));
    r.h = parse_real(f[2], line);
    r.ise = parse_real(f[3], line);
    r.zeta = parse_real(f[4], line);
    r.acceptance = parse_real(f[5], line);
    r.iat = parse_real(f[6], line);
    out.push_back(std::move(r));
  }
  return out;
}

inline constexpr const char* summary_header =
    "method,count,failures,mean_h,se_h,mean_ise,se_ise,mean_zeta";

inline void write_summary_csv(std::ostream& out,
                              const std::vector<MethodSummary>& summary,
                              const Provenance& prov = {}) {
  write_provenance(out, prov);
  out << summary_header << '\n';
  auto opt = [](const std::optional<double>& v) {
    return v ? format_real(*v) : std::string();
  };
  for (const auto& s : summary) {
    out << estimator_name(s.method) << ',' << s.count << ',' << s.failures
        << ',' << format_real(s.mean_h) << ',' << opt(s.se_h) << ','
        << format_real(s.mean_ise) << ',' << opt(s.se_ise) << ','
        << format_real(s.mean_zeta) << '\n';
  }
}

namespace detail {

inline nlohmann::ordered_json json_real(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

}  // namespace detail

inline nlohmann::ordered_json records_json(
    const std::vector<MethodRecord>& records) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    if (!r.ok) continue;
    arr.push_back({{"method", estimator_name(r.method)},
                   {"replicate", r.replicate},
                   {"h", detail::json_real(r.h)},
                   {"ise", detail::json_real(r.ise)},
                   {"zeta", detail::json_real(r.zeta)},
                   {"acceptance", detail::json_real(r.acceptance)},
                   {"iat", detail::json_real(r.iat)}});
  }
  return arr;
}

//! Summary object keyed by method name.
inline nlohmann::ordered_json summary_json(
    const std::vector<MethodSummary>& summary) {
  nlohmann::ordered_json obj = nlohmann::ordered_json::object();
  for (const auto& s : summary) {
    nlohmann::ordered_json row = {{"count", s.count},
                                  {"failures", s.failures},
                                  {"mean_h", detail::json_real(s.mean_h)},
                                  {"mean_ise", detail::json_real(s.mean_ise)},
                                  {"mean_zeta", detail::json_real(s.mean_zeta)}};
    row["se_h"] = detail::json_real(s.se_h.value_or(std::nan("")));
    row["se_ise"] = detail::json_real(s.se_ise.value_or(std::nan("")));
    obj[std::string(estimator_name(s.method))] = row;
  }
  return obj;
}

}  // namespace depkde
