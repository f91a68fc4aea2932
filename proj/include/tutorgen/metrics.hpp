#pragma once

// Evaluation metrics for tutoring dialogs: Success@k / Telling@k curves,
// helpfulness, Likert dimension summaries, ICC(2,1) inter-rater reliability
// and the dimension correlation matrix, plus the report that bundles them.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutorgen/error.hpp"
#include "tutorgen/io.hpp"
#include "tutorgen/record.hpp"
#include "tutorgen/text.hpp"

namespace tutorgen::metrics {

using ordered_json = nlohmann::ordered_json;

inline constexpr int kMaxK = 10;
inline constexpr int kLikertMin = -2;
inline constexpr int kLikertMax = 2;

enum class Dimension { care = 0, coherence, correctness, gmsl };
inline constexpr std::array kDimensions{Dimension::care, Dimension::coherence, Dimension::correctness,
                                        Dimension::gmsl};
inline constexpr std::array<const char*, 4> kDimensionNames{"care", "coherence", "correctness", "gmsl"};

inline std::size_t idx(Dimension d) { return static_cast<std::size_t>(d); }

// ---------------------------------------------------------------------------
// Outcome curves

enum class TellingSource { heuristic, manual };

struct DialogOutcomeView {
  std::string dialog_id;
  std::optional<int> success_tutor_turn;  // 1-based tutor turn at which success fired
  std::optional<int> telling_tutor_turn;  // 1-based tutor turn at which the answer was told
  double duration_seconds = 0.0;
  std::string arm;
  TellingSource telling_source = TellingSource::heuristic;

  /// Replace the detector's verdict with a human annotation.
  void override_telling(std::optional<int> tutor_turn) {
    telling_tutor_turn = tutor_turn;
    telling_source = TellingSource::manual;
  }
};

namespace detail {

inline void require_k(int k) {
  if (k < 1) throw ValidationError("k must be >= 1");
}

template <typename Proj>
double fraction_within(std::span<const DialogOutcomeView> views, int k, Proj proj, const char* what) {
  if (views.empty()) throw DomainError(std::string(what) + " requires at least one dialog");
  require_k(k);
  std::size_t hits = 0;
  for (const auto& v : views) {
    const std::optional<int>& turn = proj(v);
    if (turn && *turn <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(views.size());
}

}  // namespace detail

inline double success_at_k(std::span<const DialogOutcomeView> views, int k) {
  return detail::fraction_within(views, k, [](const DialogOutcomeView& v) -> const auto& { return v.success_tutor_turn; },
                                 "success_at_k");
}

/// Denominator is every dialog evaluated, not only those that were told.
inline double telling_at_k(std::span<const DialogOutcomeView> views, int k) {
  return detail::fraction_within(views, k, [](const DialogOutcomeView& v) -> const auto& { return v.telling_tutor_turn; },
                                 "telling_at_k");
}

/// First tutor turn (1-based) whose normalized text contains the normalized
/// correct option, unless a student turn already said it earlier.
inline std::optional<int> detect_telling(const DialogRecord& record) {
  const auto& g = record.session.grounding;
  if (g.correct_index < 0 || g.correct_index >= static_cast<int>(g.options.size())) return std::nullopt;
  auto needle = normalize_for_match(g.correct_option());
  if (needle.empty()) return std::nullopt;
  int tutor_index = 0;
  for (const auto& t : record.session.history) {
    bool mentions = normalize_for_match(t.text).find(needle) != std::string::npos;
    if (t.speaker == Speaker::student) {
      if (mentions) return std::nullopt;
    } else {
      ++tutor_index;
      if (mentions) return tutor_index;
    }
  }
  return std::nullopt;
}

inline DialogOutcomeView outcome_view(const DialogRecord& r) {
  DialogOutcomeView v;
  v.dialog_id = r.dialog_id;
  if (r.outcome == Outcome::success) v.success_tutor_turn = r.session.tutor_turns;
  v.telling_tutor_turn = detect_telling(r);
  if (r.session.ended_at) v.duration_seconds = std::max(0.0, seconds_between(r.session.started_at, *r.session.ended_at));
  v.arm = r.arm;
  return v;
}

inline std::vector<DialogOutcomeView> outcome_views(const std::vector<DialogRecord>& dataset) {
  std::vector<DialogOutcomeView> out;
  out.reserve(dataset.size());
  for (const auto& r : dataset) out.push_back(outcome_view(r));
  return out;
}

// ---------------------------------------------------------------------------
// Likert ratings

inline void require_likert(int v, const char* what) {
  if (v < kLikertMin || v > kLikertMax) {
    throw ValidationError(std::string(what) + " must be in [-2, 2], got " + std::to_string(v));
  }
}

inline double helpfulness(std::span<const int> scores) {
  if (scores.empty()) throw DomainError("helpfulness requires at least one score");
  long sum = 0;
  for (int s : scores) {
    require_likert(s, "helpfulness score");
    sum += s;
  }
  return static_cast<double>(sum) / static_cast<double>(scores.size());
}

struct RatingRecord {
  std::string dialog_id;
  std::string rater_id;
  std::array<int, 4> scores{};  // indexed by Dimension

  int operator[](Dimension d) const { return scores[idx(d)]; }

  void validate() const {
    if (dialog_id.empty() || rater_id.empty()) throw ValidationError("rating requires dialog_id and rater_id");
    for (auto d : kDimensions) require_likert(scores[idx(d)], kDimensionNames[idx(d)]);
  }

  bool operator==(const RatingRecord&) const = default;
};

struct DimensionSummary {
  std::size_t count = 0;
  std::array<double, 4> means{};
  std::array<std::array<std::size_t, 5>, 4> response_counts{};  // [dimension][score + 2]
};

inline DimensionSummary dimension_summary(std::span<const RatingRecord> ratings) {
  if (ratings.empty()) throw DomainError("dimension_summary requires at least one rating");
  DimensionSummary s;
  s.count = ratings.size();
  std::array<long, 4> sums{};
  for (const auto& r : ratings) {
    r.validate();
    for (auto d : kDimensions) {
      sums[idx(d)] += r[d];
      ++s.response_counts[idx(d)][static_cast<std::size_t>(r[d] - kLikertMin)];
    }
  }
  for (auto d : kDimensions) s.means[idx(d)] = static_cast<double>(sums[idx(d)]) / static_cast<double>(ratings.size());
  return s;
}

/// Items (dialogs) x raters for a single dimension; missing cells are empty.
struct RatingMatrix {
  std::vector<std::vector<std::optional<double>>> cells;  // [item][rater]

  static RatingMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    RatingMatrix m;
    for (const auto& row : rows) m.cells.emplace_back(row.begin(), row.end());
    return m;
  }

  /// Items and raters are ordered by id.
  static RatingMatrix from_ratings(std::span<const RatingRecord> ratings, Dimension d) {
    std::map<std::string, std::size_t> items, raters;
    for (const auto& r : ratings) {
      items.emplace(r.dialog_id, 0);
      raters.emplace(r.rater_id, 0);
    }
    std::size_t i = 0;
    for (auto& [_, pos] : items) pos = i++;
    i = 0;
    for (auto& [_, pos] : raters) pos = i++;
    RatingMatrix m;
    m.cells.assign(items.size(), std::vector<std::optional<double>>(raters.size()));
    for (const auto& r : ratings) m.cells[items[r.dialog_id]][raters[r.rater_id]] = r[d];
    return m;
  }

  /// Items with any missing cell removed.
  std::vector<std::vector<double>> complete_rows() const {
    std::vector<std::vector<double>> out;
    for (const auto& row : cells) {
      if (std::all_of(row.begin(), row.end(), [](const auto& c) { return c.has_value(); })) {
        std::vector<double> r;
        for (const auto& c : row) r.push_back(*c);
        out.push_back(std::move(r));
      }
    }
    return out;
  }
};

/// ICC(2,1): two-way random effects, absolute agreement, single rater.
/// Items with a missing cell are dropped first (listwise deletion).
inline double icc(const RatingMatrix& matrix) {
  auto rows = matrix.complete_rows();
  const std::size_t n = rows.size();
  const std::size_t k = n == 0 ? 0 : rows.front().size();
  if (n < 2 || k < 2) throw DomainError("icc requires at least 2 complete items and 2 raters");

  double grand = 0.0;
  for (const auto& r : rows) {
    for (double x : r) grand += x;
  }
  grand /= static_cast<double>(n * k);

  std::vector<double> row_mean(n, 0.0), col_mean(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      row_mean[i] += rows[i][j];
      col_mean[j] += rows[i][j];
    }
  }
  for (auto& m : row_mean) m /= static_cast<double>(k);
  for (auto& m : col_mean) m /= static_cast<double>(n);

  double ss_rows = 0.0, ss_cols = 0.0, ss_err = 0.0;
  bool identical = true;
  for (std::size_t i = 0; i < n; ++i) {
    ss_rows += (row_mean[i] - grand) * (row_mean[i] - grand);
    for (std::size_t j = 0; j < k; ++j) {
      double resid = rows[i][j] - row_mean[i] - col_mean[j] + grand;
      ss_err += resid * resid;
      if (rows[i][j] != rows[0][0]) identical = false;
    }
  }
  for (std::size_t j = 0; j < k; ++j) ss_cols += (col_mean[j] - grand) * (col_mean[j] - grand);
  ss_rows *= static_cast<double>(k);
  ss_cols *= static_cast<double>(n);
  if (identical) return 1.0;

  const double dn = static_cast<double>(n), dk = static_cast<double>(k);
  const double ms_rows = ss_rows / (dn - 1.0);
  const double ms_cols = ss_cols / (dk - 1.0);
  const double ms_err = ss_err / ((dn - 1.0) * (dk - 1.0));
  const double denom = ms_rows + (dk - 1.0) * ms_err + (dk / dn) * (ms_cols - ms_err);
  if (!(denom > 0.0)) throw DomainError("icc undefined: degenerate variance decomposition");
  return (ms_rows - ms_err) / denom;
}

// ---------------------------------------------------------------------------
// Correlations

using DimensionScores = std::array<double, 4>;
using CorrelationMatrix = std::array<std::array<std::optional<double>, 4>, 4>;

/// Pearson correlation between every pair of dimensions across units. A
/// dimension with zero variance yields empty entries in its row and column.
inline CorrelationMatrix correlation_matrix(std::span<const DimensionScores> units) {
  if (units.size() < 2) throw DomainError("correlation_matrix requires at least 2 units");
  const double n = static_cast<double>(units.size());
  std::array<double, 4> mean{};
  std::array<bool, 4> constant{};
  for (std::size_t d = 0; d < 4; ++d) {
    constant[d] = true;
    for (const auto& u : units) {
      mean[d] += u[d];
      if (u[d] != units.front()[d]) constant[d] = false;
    }
    mean[d] /= n;
  }
  CorrelationMatrix out{};
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a; b < 4; ++b) {
      if (constant[a] || constant[b]) continue;
      double sab = 0.0, saa = 0.0, sbb = 0.0;
      for (const auto& u : units) {
        double da = u[a] - mean[a], db = u[b] - mean[b];
        sab += da * db;
        saa += da * da;
        sbb += db * db;
      }
      double r = a == b ? 1.0 : std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
      out[a][b] = r;
      out[b][a] = r;
    }
  }
  return out;
}

/// One unit per rater (ordered by rater id): that rater's mean score on each dimension.
inline std::vector<DimensionScores> per_rater_averages(std::span<const RatingRecord> ratings) {
  std::map<std::string, std::pair<DimensionScores, std::size_t>> acc;
  for (const auto& r : ratings) {
    auto& [sum, count] = acc[r.rater_id];
    for (auto d : kDimensions) sum[idx(d)] += r[d];
    ++count;
  }
  std::vector<DimensionScores> out;
  for (auto& [_, entry] : acc) {
    auto [sum, count] = entry;
    for (auto& v : sum) v /= static_cast<double>(count);
    out.push_back(sum);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rounding and CSV helpers

/// Round to `digits` decimals, ties to even.
inline double round_half_even(double value, int digits) {
  const double scale = std::pow(10.0, digits);
  const double scaled = value * scale;
  const double floor = std::floor(scaled);
  const double diff = scaled - floor;
  double rounded;
  if (std::fabs(diff - 0.5) < 1e-9) {
    rounded = std::fmod(floor, 2.0) == 0.0 ? floor : floor + 1.0;
  } else {
    rounded = std::round(scaled);
  }
  return rounded / scale;
}

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw IoError("number formatting failed");
  return std::string(buf.data(), end);
}

namespace csv {

inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string field(std::string_view v) {
  if (v.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(v);
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw FormatError("missing CSV column '" + std::string(name) + "'");
  }
};

inline Table parse(std::string_view text) {
  Table t;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
    } else if (cells.size() != t.header.size()) {
      throw FormatError("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                        " fields, got " + std::to_string(cells.size()));
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

inline int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw FormatError("bad integer for " + what + ": '" + s + "'");
  return v;
}

}  // namespace csv

inline constexpr const char* kRatingsHeader = "dialog_id,rater_id,care,coherence,correctness,gmsl";

inline std::vector<RatingRecord> parse_ratings_csv(std::string_view text) {
  auto table = csv::parse(text);
  if (table.header.empty()) return {};
  std::vector<RatingRecord> out;
  const auto c_dialog = table.column("dialog_id"), c_rater = table.column("rater_id");
  std::array<std::size_t, 4> c_dims{};
  for (auto d : kDimensions) c_dims[idx(d)] = table.column(kDimensionNames[idx(d)]);
  for (const auto& row : table.rows) {
    RatingRecord r;
    r.dialog_id = row[c_dialog];
    r.rater_id = row[c_rater];
    for (auto d : kDimensions) r.scores[idx(d)] = csv::parse_int(row[c_dims[idx(d)]], kDimensionNames[idx(d)]);
    r.validate();
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string ratings_to_csv(std::span<const RatingRecord> ratings) {
  std::string out = std::string(kRatingsHeader) + "\n";
  for (const auto& r : ratings) {
    out += csv::field(r.dialog_id) + "," + csv::field(r.rater_id);
    for (auto d : kDimensions) out += "," + std::to_string(r[d]);
    out += "\n";
  }
  return out;
}

struct HelpfulnessEntry {
  std::string session_id;
  std::string arm;
  int score = 0;
};

/// Reads the `arm` and `score` columns (plus `session_id` when present).
inline std::vector<HelpfulnessEntry> parse_helpfulness_csv(std::string_view text) {
  auto table = csv::parse(text);
  if (table.header.empty()) return {};
  const auto c_arm = table.column("arm"), c_score = table.column("score");
  std::optional<std::size_t> c_session;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (table.header[i] == "session_id") c_session = i;
  }
  std::vector<HelpfulnessEntry> out;
  for (const auto& row : table.rows) {
    HelpfulnessEntry e{c_session ? row[*c_session] : std::string{}, row[c_arm], csv::parse_int(row[c_score], "score")};
    require_likert(e.score, "helpfulness score");
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report

struct ArmReport {
  std::size_t dialogs = 0;
  std::array<double, kMaxK> success_at{};  // k = 1..10
  std::array<double, kMaxK> telling_at{};
  double mean_duration_seconds = 0.0;
  std::optional<double> helpfulness;  // rounded to 3 dp
  std::size_t helpfulness_n = 0;
  std::optional<std::array<double, 4>> dimension_means;  // rounded to 3 dp
  std::size_t manual_telling = 0;
};

struct RatingsReport {
  DimensionSummary summary;  // means rounded to 3 dp
  std::array<std::optional<double>, 4> icc{};
  std::optional<CorrelationMatrix> correlation;
  std::size_t correlation_units = 0;
};

struct MetricsReport {
  std::map<std::string, ArmReport> arms;
  std::optional<RatingsReport> ratings;
};

struct ReportInputs {
  std::vector<DialogRecord> dataset;
  std::vector<RatingRecord> ratings;
  std::vector<DialogOutcomeView> views;  // derived from `dataset` when empty
  std::vector<HelpfulnessEntry> helpfulness;
};

inline MetricsReport build_report(const ReportInputs& in) {
  auto views = in.views.empty() ? outcome_views(in.dataset) : in.views;

  std::map<std::string, std::string> arm_of;
  for (const auto& r : in.dataset) arm_of[r.dialog_id] = r.arm;
  if (!in.dataset.empty()) {
    std::vector<std::string> missing;
    for (const auto& v : views) {
      if (!arm_of.count(v.dialog_id)) missing.push_back(v.dialog_id);
    }
    if (!missing.empty()) {
      std::string ids;
      for (const auto& m : missing) ids += (ids.empty() ? "" : ", ") + m;
      throw ValidationError("outcome views reference unknown dialog ids: " + ids);
    }
  }
  for (const auto& v : views) arm_of.emplace(v.dialog_id, v.arm);

  std::set<std::string> dangling;
  for (const auto& r : in.ratings) {
    r.validate();
    if (!arm_of.count(r.dialog_id)) dangling.insert(r.dialog_id);
  }
  if (!dangling.empty()) {
    std::string ids;
    for (const auto& d : dangling) ids += (ids.empty() ? "" : ", ") + d;
    throw ValidationError("ratings reference unknown dialog ids: " + ids);
  }

  MetricsReport report;
  std::map<std::string, std::vector<DialogOutcomeView>> by_arm;
  for (const auto& v : views) by_arm[v.arm].push_back(v);
  for (const auto& h : in.helpfulness) by_arm.try_emplace(h.arm);

  for (const auto& [arm, arm_views] : by_arm) {
    ArmReport a;
    a.dialogs = arm_views.size();
    if (!arm_views.empty()) {
      double dur = 0.0;
      for (const auto& v : arm_views) {
        dur += v.duration_seconds;
        if (v.telling_source == TellingSource::manual) ++a.manual_telling;
      }
      a.mean_duration_seconds = dur / static_cast<double>(arm_views.size());
      for (int k = 1; k <= kMaxK; ++k) {
        a.success_at[static_cast<std::size_t>(k - 1)] = success_at_k(arm_views, k);
        a.telling_at[static_cast<std::size_t>(k - 1)] = telling_at_k(arm_views, k);
      }
    }
    std::vector<int> scores;
    for (const auto& h : in.helpfulness) {
      if (h.arm == arm) scores.push_back(h.score);
    }
    if (!scores.empty()) {
      a.helpfulness = round_half_even(helpfulness(scores), 3);
      a.helpfulness_n = scores.size();
    }
    std::vector<RatingRecord> arm_ratings;
    for (const auto& r : in.ratings) {
      if (arm_of[r.dialog_id] == arm) arm_ratings.push_back(r);
    }
    if (!arm_ratings.empty()) {
      auto s = dimension_summary(arm_ratings);
      std::array<double, 4> means{};
      for (std::size_t d = 0; d < 4; ++d) means[d] = round_half_even(s.means[d], 3);
      a.dimension_means = means;
    }
    report.arms.emplace(arm, a);
  }

  if (!in.ratings.empty()) {
    RatingsReport rr;
    rr.summary = dimension_summary(in.ratings);
    for (auto& m : rr.summary.means) m = round_half_even(m, 3);
    for (auto d : kDimensions) {
      try {
        rr.icc[idx(d)] = icc(RatingMatrix::from_ratings(in.ratings, d));
      } catch (const DomainError&) {
        // too few raters or complete items; reported as null
      }
    }
    auto units = per_rater_averages(in.ratings);
    rr.correlation_units = units.size();
    if (units.size() >= 2) rr.correlation = correlation_matrix(units);
    report.ratings = rr;
  }
  return report;
}

inline ordered_json to_json(const MetricsReport& report) {
  auto opt = [](const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  auto dims = [](const std::array<double, 4>& v) {
    ordered_json j = ordered_json::object();
    for (auto d : kDimensions) j[kDimensionNames[idx(d)]] = v[idx(d)];
    return j;
  };
  ordered_json arms = ordered_json::object();
  for (const auto& [name, a] : report.arms) {
    arms[name] = ordered_json{
        {"dialogs", a.dialogs},
        {"success_at_k", a.success_at},
        {"telling_at_k", a.telling_at},
        {"telling_detection", a.manual_telling == 0 ? "heuristic" : (a.manual_telling == a.dialogs ? "manual" : "mixed")},
        {"mean_duration_seconds", a.mean_duration_seconds},
        {"helpfulness", opt(a.helpfulness)},
        {"helpfulness_n", a.helpfulness_n},
        {"dimension_means", a.dimension_means ? dims(*a.dimension_means) : ordered_json(nullptr)},
    };
  }
  ordered_json ratings = nullptr;
  if (report.ratings) {
    const auto& r = *report.ratings;
    ordered_json counts = ordered_json::object();
    ordered_json icc_j = ordered_json::object();
    for (auto d : kDimensions) {
      ordered_json c = ordered_json::object();
      for (int v = kLikertMin; v <= kLikertMax; ++v) {
        c[std::to_string(v)] = r.summary.response_counts[idx(d)][static_cast<std::size_t>(v - kLikertMin)];
      }
      counts[kDimensionNames[idx(d)]] = c;
      icc_j[kDimensionNames[idx(d)]] = opt(r.icc[idx(d)]);
    }
    ordered_json corr = nullptr;
    if (r.correlation) {
      corr = ordered_json::array();
      for (const auto& row : *r.correlation) {
        ordered_json jr = ordered_json::array();
        for (const auto& c : row) jr.push_back(opt(c));
        corr.push_back(jr);
      }
    }
    ratings = ordered_json{{"count", r.summary.count},
                           {"dimension_means", dims(r.summary.means)},
                           {"response_counts", counts},
                           {"icc", icc_j},
                           {"icc_model", "ICC(2,1)"},
                           {"correlation_dimensions", kDimensionNames},
                           {"correlation_units", r.correlation_units},
                           {"correlation", corr}};
  }
  return ordered_json{{"telling_detector", "normalized-substring heuristic"}, {"arms", arms}, {"ratings", ratings}};
}

/// `arm,k,value` rows for k = 1..10.
inline std::string curve_csv(const MetricsReport& report, bool telling) {
  std::string out = "arm,k,value\n";
  for (const auto& [name, a] : report.arms) {
    const auto& series = telling ? a.telling_at : a.success_at;
    for (int k = 1; k <= kMaxK; ++k) {
      out += csv::field(name) + "," + std::to_string(k) + "," + format_number(series[static_cast<std::size_t>(k - 1)]) + "\n";
    }
  }
  return out;
}

inline void write_report(const MetricsReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  io::write_file(out_dir / "report.json", to_json(report).dump(2) + "\n");
  io::write_file(out_dir / "success_curve.csv", curve_csv(report, false));
  io::write_file(out_dir / "telling_curve.csv", curve_csv(report, true));
}

}  // namespace tutorgen::metrics
