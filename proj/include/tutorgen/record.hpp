#pragma once

// Tutoring-session data: turns with their annotations, the live session
// state, and the persisted DialogRecord with its JSONL encoding.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutorgen/corpus.hpp"
#include "tutorgen/error.hpp"
#include "tutorgen/text.hpp"

namespace tutorgen {

using ordered_json = nlohmann::ordered_json;

inline constexpr int kDefaultMaxTutorTurns = 10;
inline constexpr int kSchemaVersion = 1;

enum class Speaker { tutor, student };
enum class SessionStatus { active, success, turn_limit };

inline std::string_view to_string(Speaker s) { return s == Speaker::tutor ? "tutor" : "student"; }

inline std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::active: return "active";
    case SessionStatus::success: return "success";
    case SessionStatus::turn_limit: return "turn_limit";
  }
  return "active";
}

inline Speaker speaker_from_string(std::string_view s) {
  if (s == "tutor") return Speaker::tutor;
  if (s == "student") return Speaker::student;
  throw FormatError("unknown speaker '" + std::string(s) + "'");
}

inline SessionStatus status_from_string(std::string_view s) {
  if (s == "active") return SessionStatus::active;
  if (s == "success") return SessionStatus::success;
  if (s == "turn_limit") return SessionStatus::turn_limit;
  throw FormatError("unknown status '" + std::string(s) + "'");
}

/// Per-turn labels. Talktime is always computed locally; the remaining
/// labels come from external classifiers and stay empty when unavailable.
struct AnnotationSet {
  int talktime = 0;
  std::optional<int> stm;        // student talk move, 0..4
  std::optional<int> ttm;        // tutor talk move, 0 other / 1 keeping everyone together
  std::optional<int> uptake;     // tutor
  std::optional<int> focusing;   // tutor
  std::optional<int> reasoning;  // student

  bool operator==(const AnnotationSet&) const = default;
};

/// Throws ValidationError if a label sits on the wrong speaker or is out of range.
inline void validate_placement(const AnnotationSet& a, Speaker who) {
  auto binary = [](const std::optional<int>& v) { return !v || *v == 0 || *v == 1; };
  if (a.talktime < 0) throw ValidationError("talktime must be >= 0");
  if (who == Speaker::tutor) {
    if (a.stm || a.reasoning) throw ValidationError("stm/reasoning are student-only labels");
  } else if (a.ttm || a.uptake || a.focusing) {
    throw ValidationError("ttm/uptake/focusing are tutor-only labels");
  }
  if (a.stm && (*a.stm < 0 || *a.stm > 4)) throw ValidationError("stm must be in 0..4");
  if (!binary(a.ttm) || !binary(a.uptake) || !binary(a.focusing) || !binary(a.reasoning)) {
    throw ValidationError("binary labels must be 0 or 1");
  }
}

struct Turn {
  int index = 0;
  Speaker speaker = Speaker::student;
  std::string text;
  Instant timestamp{};
  std::optional<AnnotationSet> annotations;

  bool operator==(const Turn&) const = default;
};

struct LearnerProfile {
  std::string name;
  std::string system_prompt;

  bool operator==(const LearnerProfile&) const = default;
};

/// The passage/question context a dialog is grounded on, copied verbatim
/// from the corpus.
struct Grounding {
  std::string passage_text;
  std::string question_stem;
  std::vector<std::string> options;
  int correct_index = 0;

  const std::string& correct_option() const { return options.at(static_cast<std::size_t>(correct_index)); }

  static Grounding from(const corpus::Worksheet& w, const corpus::Question& q) {
    return Grounding{w.passage_text, q.stem, q.options, q.correct_index};
  }

  bool operator==(const Grounding&) const = default;
};

struct SessionState {
  std::string worksheet_id;
  std::string question_id;
  Grounding grounding;
  std::optional<LearnerProfile> profile;  // absent in interactive mode
  int wrong_option_index = 0;
  std::vector<Turn> history;
  int tutor_turns = 0;
  int max_tutor_turns = kDefaultMaxTutorTurns;
  SessionStatus status = SessionStatus::active;
  Instant started_at{};
  std::optional<Instant> ended_at;

  bool interactive() const { return !profile.has_value(); }
  bool closed() const { return status != SessionStatus::active; }
  const Turn& last_turn() const { return history.back(); }

  bool operator==(const SessionState&) const = default;
};

enum class Outcome { success, turn_limit };

struct DialogRecord {
  std::string dialog_id;
  SessionState session;
  Outcome outcome = Outcome::turn_limit;
  std::string arm;
  std::string model_name;

  bool operator==(const DialogRecord&) const = default;
};

// ---------------------------------------------------------------------------
// JSON encoding. Key order is fixed so serialization is canonical.

inline ordered_json annotations_to_json(const AnnotationSet& a) {
  ordered_json j{{"talktime", a.talktime}};
  if (a.stm) j["stm"] = *a.stm;
  if (a.ttm) j["ttm"] = *a.ttm;
  if (a.uptake) j["uptake"] = *a.uptake;
  if (a.focusing) j["focusing"] = *a.focusing;
  if (a.reasoning) j["reasoning"] = *a.reasoning;
  return j;
}

inline AnnotationSet annotations_from_json(const nlohmann::json& j) {
  AnnotationSet a;
  a.talktime = j.at("talktime").get<int>();
  auto opt = [&](const char* key) -> std::optional<int> {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) return it->get<int>();
    return std::nullopt;
  };
  a.stm = opt("stm");
  a.ttm = opt("ttm");
  a.uptake = opt("uptake");
  a.focusing = opt("focusing");
  a.reasoning = opt("reasoning");
  return a;
}

/// Writes the SessionState fields into `j` (appending keys in a fixed order).
inline void append_session_fields(ordered_json& j, const SessionState& s) {
  ordered_json turns = ordered_json::array();
  for (const auto& t : s.history) {
    ordered_json tj{{"index", t.index},
                    {"speaker", to_string(t.speaker)},
                    {"text", t.text},
                    {"timestamp", format_instant(t.timestamp)}};
    if (t.annotations) tj["annotations"] = annotations_to_json(*t.annotations);
    turns.push_back(std::move(tj));
  }
  ordered_json profile = nullptr;
  if (s.profile) profile = ordered_json{{"name", s.profile->name}, {"system_prompt", s.profile->system_prompt}};
  j["worksheet_id"] = s.worksheet_id;
  j["question_id"] = s.question_id;
  j["profile"] = profile;
  j["wrong_option_index"] = s.wrong_option_index;
  j["tutor_turns"] = s.tutor_turns;
  j["max_tutor_turns"] = s.max_tutor_turns;
  j["status"] = to_string(s.status);
  j["started_at"] = format_instant(s.started_at);
  j["ended_at"] = s.ended_at ? ordered_json(format_instant(*s.ended_at)) : ordered_json(nullptr);
  j["grounding"] = ordered_json{{"passage_text", s.grounding.passage_text},
                                {"question_stem", s.grounding.question_stem},
                                {"options", s.grounding.options},
                                {"correct_index", s.grounding.correct_index}};
  j["turns"] = std::move(turns);
}

inline ordered_json to_json(const SessionState& s) {
  ordered_json j = ordered_json::object();
  append_session_fields(j, s);
  return j;
}

inline SessionState session_from_json(const nlohmann::json& j) {
  SessionState s;
  s.worksheet_id = j.at("worksheet_id").get<std::string>();
  s.question_id = j.at("question_id").get<std::string>();
  if (const auto& p = j.at("profile"); !p.is_null()) {
    s.profile = LearnerProfile{p.at("name").get<std::string>(), p.at("system_prompt").get<std::string>()};
  }
  s.wrong_option_index = j.at("wrong_option_index").get<int>();
  s.tutor_turns = j.at("tutor_turns").get<int>();
  s.max_tutor_turns = j.at("max_tutor_turns").get<int>();
  s.status = status_from_string(j.at("status").get<std::string>());
  s.started_at = parse_instant(j.at("started_at").get<std::string>());
  if (const auto& e = j.at("ended_at"); !e.is_null()) s.ended_at = parse_instant(e.get<std::string>());
  const auto& g = j.at("grounding");
  s.grounding.passage_text = g.at("passage_text").get<std::string>();
  s.grounding.question_stem = g.at("question_stem").get<std::string>();
  s.grounding.options = g.at("options").get<std::vector<std::string>>();
  s.grounding.correct_index = g.at("correct_index").get<int>();
  for (const auto& tj : j.at("turns")) {
    Turn t;
    t.index = tj.at("index").get<int>();
    t.speaker = speaker_from_string(tj.at("speaker").get<std::string>());
    t.text = tj.at("text").get<std::string>();
    t.timestamp = parse_instant(tj.at("timestamp").get<std::string>());
    if (auto it = tj.find("annotations"); it != tj.end() && !it->is_null()) {
      t.annotations = annotations_from_json(*it);
    }
    s.history.push_back(std::move(t));
  }
  return s;
}

inline ordered_json to_json(const DialogRecord& r) {
  ordered_json j{{"schema_version", kSchemaVersion}, {"dialog_id", r.dialog_id}};
  j["outcome"] = r.outcome == Outcome::success ? "success" : "turn_limit";
  j["arm"] = r.arm;
  j["model_name"] = r.model_name;
  append_session_fields(j, r.session);
  return j;
}

inline DialogRecord record_from_json(const nlohmann::json& j) {
  DialogRecord r;
  auto version = j.at("schema_version").get<int>();
  if (version != kSchemaVersion) throw FormatError("unsupported schema_version " + std::to_string(version));
  r.dialog_id = j.at("dialog_id").get<std::string>();
  auto outcome = j.at("outcome").get<std::string>();
  if (outcome == "success") {
    r.outcome = Outcome::success;
  } else if (outcome == "turn_limit") {
    r.outcome = Outcome::turn_limit;
  } else {
    throw FormatError("unknown outcome '" + outcome + "'");
  }
  r.arm = j.at("arm").get<std::string>();
  r.model_name = j.at("model_name").get<std::string>();
  r.session = session_from_json(j);
  return r;
}

inline std::string to_jsonl_line(const DialogRecord& r) { return to_json(r).dump() + "\n"; }

/// Parses one JSONL line; `line_no` is 1-based and only used in messages.
inline DialogRecord parse_record_line(std::string_view line, std::size_t line_no) {
  try {
    return record_from_json(nlohmann::json::parse(line));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
  }
}

}  // namespace tutorgen
