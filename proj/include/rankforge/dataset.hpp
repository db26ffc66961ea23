#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace rankforge {

/// One match in chronological order. Indices are dense team indices into
/// Dataset::team_names; `venue` is 1 when played on the home team's venue
/// and 0 on a neutral one.
struct MatchRecord {
  std::string date;
  int home = 0;
  int away = 0;
  int outcome = 0;   // y in [0, L)
  int venue = 0;     // h in {0, 1}
  int category = 0;  // v in [0, K)
  std::optional<double> increment_home;  // published rating increment, if known
};

struct Dataset {
  std::vector<MatchRecord> matches;
  std::vector<std::string> team_names;               // dense index -> id
  std::unordered_map<std::string, int> team_index;   // id -> dense index
  std::vector<double> initial_skills;                // optional online warm start

  int team_count() const { return static_cast<int>(team_names.size()); }
  std::size_t match_count() const { return matches.size(); }

  int intern_team(const std::string& id) {
    auto it = team_index.find(id);
    if (it != team_index.end()) return it->second;
    int idx = team_count();
    team_names.push_back(id);
    team_index.emplace(id, idx);
    return idx;
  }

  const std::string& team_name(int idx) const { return team_names.at(static_cast<std::size_t>(idx)); }
};

/// Signed sparse indicator of a match: +1 at the home index, -1 at the away
/// index. Materialized as a dense vector for oracle-style code; hot paths
/// use the two indices directly.
inline std::vector<double> schedule_vector(const MatchRecord& rec, int team_count) {
  if (rec.home < 0 || rec.home >= team_count || rec.away < 0 || rec.away >= team_count)
    throw std::out_of_range("schedule_vector: team index out of range");
  if (rec.home == rec.away) throw std::invalid_argument("schedule_vector: home == away");
  std::vector<double> x(static_cast<std::size_t>(team_count), 0.0);
  x[static_cast<std::size_t>(rec.home)] = 1.0;
  x[static_cast<std::size_t>(rec.away)] = -1.0;
  return x;
}

/// Outcome tallies split by venue. Neutral-venue matches are counted
/// together with their mirror outcome, which makes the neutral counts
/// half-integers; they are stored exactly as numerators over 2.
struct OutcomeCounts {
  std::vector<std::int64_t> ntr_twice;  // 2 * k_ntr[y]
  std::vector<std::int64_t> hfa;        // k_hfa[y]
  std::int64_t total_ntr = 0;
  std::int64_t total_hfa = 0;

  double k_ntr(int y) const { return 0.5 * static_cast<double>(ntr_twice.at(static_cast<std::size_t>(y))); }
  std::int64_t k_hfa(int y) const { return hfa.at(static_cast<std::size_t>(y)); }
};

inline OutcomeCounts outcome_counts(const Dataset& d, int outcomes) {
  OutcomeCounts oc;
  oc.ntr_twice.assign(static_cast<std::size_t>(outcomes), 0);
  oc.hfa.assign(static_cast<std::size_t>(outcomes), 0);
  for (const auto& m : d.matches) {
    if (m.outcome < 0 || m.outcome >= outcomes)
      throw std::out_of_range("outcome_counts: outcome index out of range");
    if (m.venue == 0) {
      oc.ntr_twice[static_cast<std::size_t>(m.outcome)] += 1;
      oc.ntr_twice[static_cast<std::size_t>(outcomes - 1 - m.outcome)] += 1;
      oc.total_ntr += 1;
    } else {
      oc.hfa[static_cast<std::size_t>(m.outcome)] += 1;
      oc.total_hfa += 1;
    }
  }
  return oc;
}

/// Rules for the published-data exclusions: matches whose displayed rating
/// increment is 0 or 0.01 (no effect on the official ranking), and an
/// explicit forfeit list keyed by (date, home, away).
struct ForfeitKey {
  std::string date, home, away;
};

struct FilterRules {
  bool drop_small_increments = false;
  std::vector<ForfeitKey> forfeits;
};

struct ExclusionRecord {
  std::size_t t = 0;  // 1-based chronological index in the input
  std::string rule;
  std::string detail;
};

struct FilterResult {
  Dataset data;
  std::vector<ExclusionRecord> excluded;
};

inline FilterResult filter_matches(const Dataset& d, const FilterRules& rules) {
  FilterResult out;
  out.data.team_names = d.team_names;
  out.data.team_index = d.team_index;
  out.data.initial_skills = d.initial_skills;
  for (std::size_t i = 0; i < d.matches.size(); ++i) {
    const MatchRecord& m = d.matches[i];
    if (rules.drop_small_increments) {
      if (!m.increment_home.has_value())
        throw std::invalid_argument(
            "filter_matches: increment rule requested but the increment column is absent");
      double inc = std::abs(*m.increment_home);
      if (inc == 0.0 || inc == 0.01) {
        out.excluded.push_back({i + 1, "small-increment",
                                d.team_name(m.home) + " vs " + d.team_name(m.away) + " on " + m.date});
        continue;
      }
    }
    bool forfeited = false;
    for (const auto& f : rules.forfeits) {
      if (f.date == m.date && f.home == d.team_name(m.home) && f.away == d.team_name(m.away)) {
        out.excluded.push_back({i + 1, "forfeit",
                                d.team_name(m.home) + " vs " + d.team_name(m.away) + " on " + m.date});
        forfeited = true;
        break;
      }
    }
    if (forfeited) continue;
    out.data.matches.push_back(m);
  }
  return out;
}

} // namespace rankforge
