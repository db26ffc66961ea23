#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rankforge/dataset.hpp"

namespace rankforge {

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline int parse_int(const std::string& s, const char* what, std::size_t line_no) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw CsvError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
  return value;
}

inline double parse_double(const std::string& s, const char* what, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    double value = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return value;
  } catch (const std::exception&) {
    throw CsvError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
  }
}

/// Maps a set score (k, l) to the outcome index: 3-0 -> 0 ... 0-3 -> 5.
inline int outcome_from_sets(int sets_home, int sets_away, std::size_t line_no) {
  static constexpr int kMap[6][2] = {{3, 0}, {3, 1}, {3, 2}, {2, 3}, {1, 3}, {0, 3}};
  for (int y = 0; y < 6; ++y)
    if (kMap[y][0] == sets_home && kMap[y][1] == sets_away) return y;
  throw CsvError("line " + std::to_string(line_no) + ": illegal set score " +
                 std::to_string(sets_home) + "-" + std::to_string(sets_away));
}

inline void sets_from_outcome(int y, int& sets_home, int& sets_away) {
  static constexpr int kMap[6][2] = {{3, 0}, {3, 1}, {3, 2}, {2, 3}, {1, 3}, {0, 3}};
  sets_home = kMap[y][0];
  sets_away = kMap[y][1];
}

/// Category labels mirroring the official weighting tiers. Numeric indices
/// are accepted directly; anything else must be a known label.
inline int parse_category(const std::string& s, int categories, std::size_t line_no) {
  static const std::pair<const char*, int> kLabels[] = {
      {"continental", 0},
      {"championship-qualifying", 1},
      {"challenger-cup", 2},
      {"olympic-qualifying", 3},
      {"confederations-championship", 3},
      {"nations-league", 4},
      {"world-championship", 5},
      {"olympic", 6},
  };
  int v = -1;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    v = -1;
    for (const auto& [label, idx] : kLabels)
      if (s == label) v = idx;
  }
  if (v < 0 || v >= categories)
    throw CsvError("line " + std::to_string(line_no) + ": unknown category label '" + s + "'");
  return v;
}

inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

} // namespace detail

/// Reads match results from a CSV file with the header
///   date,home,away,sets_home,sets_away,neutral,category[,increment_home]
/// where `neutral` holds the venue flag h (1 = home venue of the home team,
/// 0 = neutral venue). Rows are stably sorted by date; ties keep file order.
inline Dataset load_csv(std::istream& in, int categories = 7) {
  std::string line;
  if (!std::getline(in, line)) throw CsvError("empty file");
  auto header = detail::split_csv_line(line);
  static const std::vector<std::string> kRequired = {"date",      "home",    "away",
                                                     "sets_home", "sets_away", "neutral",
                                                     "category"};
  bool has_increment = false;
  if (header.size() == kRequired.size() + 1 && header.back() == "increment_home")
    has_increment = true;
  else if (header.size() != kRequired.size())
    throw CsvError("bad header: expected date,home,away,sets_home,sets_away,neutral,category"
                   "[,increment_home]");
  for (std::size_t i = 0; i < kRequired.size(); ++i)
    if (header[i] != kRequired[i])
      throw CsvError("bad header: column " + std::to_string(i + 1) + " must be '" + kRequired[i] +
                     "', got '" + header[i] + "'");

  Dataset d;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = detail::split_csv_line(line);
    std::size_t expect = kRequired.size() + (has_increment ? 1 : 0);
    if (f.size() != expect)
      throw CsvError("line " + std::to_string(line_no) + ": expected " + std::to_string(expect) +
                     " fields, got " + std::to_string(f.size()));
    MatchRecord m;
    m.date = f[0];
    if (m.date.empty()) throw CsvError("line " + std::to_string(line_no) + ": empty date");
    if (f[1].empty() || f[2].empty())
      throw CsvError("line " + std::to_string(line_no) + ": empty team id");
    if (f[1] == f[2])
      throw CsvError("line " + std::to_string(line_no) + ": home and away teams are equal");
    m.home = d.intern_team(f[1]);
    m.away = d.intern_team(f[2]);
    int sh = detail::parse_int(f[3], "sets_home", line_no);
    int sa = detail::parse_int(f[4], "sets_away", line_no);
    m.outcome = detail::outcome_from_sets(sh, sa, line_no);
    m.venue = detail::parse_int(f[5], "neutral", line_no);
    if (m.venue != 0 && m.venue != 1)
      throw CsvError("line " + std::to_string(line_no) + ": venue flag must be 0 or 1");
    m.category = detail::parse_category(f[6], categories, line_no);
    if (has_increment && !f[7].empty())
      m.increment_home = detail::parse_double(f[7], "increment_home", line_no);
    d.matches.push_back(std::move(m));
  }
  std::stable_sort(d.matches.begin(), d.matches.end(),
                   [](const MatchRecord& a, const MatchRecord& b) { return a.date < b.date; });
  return d;
}

inline Dataset load_csv(const std::string& path, int categories = 7) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open '" + path + "'");
  try {
    return load_csv(in, categories);
  } catch (const CsvError& e) {
    throw CsvError(path + ": " + e.what());
  }
}

/// Writes the canonical CSV form: load_csv followed by write_csv is a
/// byte-identical round trip for files already in canonical form.
inline void write_csv(const Dataset& d, std::ostream& out) {
  bool has_increment = false;
  for (const auto& m : d.matches)
    if (m.increment_home.has_value()) has_increment = true;
  out << "date,home,away,sets_home,sets_away,neutral,category";
  if (has_increment) out << ",increment_home";
  out << "\n";
  for (const auto& m : d.matches) {
    int sh = 0, sa = 0;
    detail::sets_from_outcome(m.outcome, sh, sa);
    out << m.date << ',' << d.team_name(m.home) << ',' << d.team_name(m.away) << ',' << sh << ','
        << sa << ',' << m.venue << ',' << m.category;
    if (has_increment) {
      out << ',';
      if (m.increment_home.has_value()) out << detail::format_double(*m.increment_home);
    }
    out << "\n";
  }
}

inline void write_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot write '" + path + "'");
  write_csv(d, out);
}

} // namespace rankforge
