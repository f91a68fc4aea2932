#pragma once

// Reading-comprehension worksheets: data model, JSON document loading with
// validation, and corpus statistics.

#include <algorithm>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutorgen/error.hpp"
#include "tutorgen/io.hpp"
#include "tutorgen/text.hpp"

namespace tutorgen::corpus {

using ordered_json = nlohmann::ordered_json;

inline constexpr std::size_t kOptionCount = 4;
inline constexpr int kMinGrade = 2;
inline constexpr int kMaxGrade = 5;

enum class QuestionType { context_clues, sequence, conclusion, prediction };

NLOHMANN_JSON_SERIALIZE_ENUM(QuestionType, {
                                               {QuestionType::context_clues, "context_clues"},
                                               {QuestionType::sequence, "sequence"},
                                               {QuestionType::conclusion, "conclusion"},
                                               {QuestionType::prediction, "prediction"},
                                           })

struct Question {
  std::string id;
  std::string stem;
  std::vector<std::string> options;
  int correct_index = 0;
  QuestionType qtype = QuestionType::conclusion;

  const std::string& correct_option() const { return options.at(static_cast<std::size_t>(correct_index)); }

  bool operator==(const Question&) const = default;
};

struct Worksheet {
  std::string id;
  std::string title;
  int grade_level = kMinGrade;
  bool fiction = false;
  std::string passage_text;
  std::vector<Question> questions;

  const Question* find_question(std::string_view qid) const {
    for (const auto& q : questions) {
      if (q.id == qid) return &q;
    }
    return nullptr;
  }

  bool operator==(const Worksheet&) const = default;
};

struct CorpusStats {
  std::size_t worksheet_count = 0;
  std::size_t question_count = 0;
  double mean_passage_words = 0.0;
  std::size_t min_passage_words = 0;
  std::size_t max_passage_words = 0;
  std::map<int, std::size_t> worksheets_per_grade;
};

// ---------------------------------------------------------------------------
// Validation

namespace detail {

[[noreturn]] inline void reject(const std::string& worksheet_id, const std::string& rule) {
  throw ValidationError("worksheet '" + worksheet_id + "': " + rule);
}

}  // namespace detail

inline void validate(const Question& q, const std::string& worksheet_id) {
  const auto where = "question '" + q.id + "': ";
  if (q.id.empty()) detail::reject(worksheet_id, "question id must be non-empty");
  if (q.stem.empty()) detail::reject(worksheet_id, where + "stem must be non-empty");
  if (q.options.size() != kOptionCount) detail::reject(worksheet_id, where + "options must number 4");
  std::set<std::string> seen;
  for (const auto& opt : q.options) {
    auto norm = normalize_option(opt);
    if (norm.empty()) detail::reject(worksheet_id, where + "options must be non-empty");
    if (!seen.insert(norm).second) {
      detail::reject(worksheet_id, where + "options must be pairwise distinct");
    }
  }
  if (q.correct_index < 0 || q.correct_index >= static_cast<int>(kOptionCount)) {
    detail::reject(worksheet_id, where + "correct_index must be in 0..3");
  }
}

inline void validate(const Worksheet& w) {
  if (w.id.empty()) detail::reject(w.id, "id must be non-empty");
  if (word_count(w.passage_text) < 1) detail::reject(w.id, "passage must contain at least one word");
  if (w.grade_level < kMinGrade || w.grade_level > kMaxGrade) {
    detail::reject(w.id, "grade_level must be in [2, 5]");
  }
  if (w.questions.empty()) detail::reject(w.id, "questions must be non-empty");
  std::set<std::string> ids;
  for (const auto& q : w.questions) {
    validate(q, w.id);
    if (!ids.insert(q.id).second) detail::reject(w.id, "duplicate question id '" + q.id + "'");
  }
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(ordered_json& j, const Question& q) {
  j = ordered_json{{"id", q.id},
                   {"stem", q.stem},
                   {"options", q.options},
                   {"correct_index", q.correct_index},
                   {"qtype", q.qtype}};
}

inline void to_json(ordered_json& j, const Worksheet& w) {
  j = ordered_json{{"id", w.id},
                   {"title", w.title},
                   {"grade_level", w.grade_level},
                   {"fiction", w.fiction},
                   {"passage_text", w.passage_text},
                   {"questions", w.questions}};
}

namespace detail {

template <typename T>
T field(const nlohmann::json& obj, const char* key, const std::string& context) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(context + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(context + ": field '" + key + "' has the wrong type");
  }
}

inline std::string line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline Question question_from_json(const nlohmann::json& j, const std::string& wid) {
  if (!j.is_object()) throw ValidationError("worksheet '" + wid + "': question must be an object");
  Question q;
  const auto ctx = "worksheet '" + wid + "'";
  q.id = field<std::string>(j, "id", ctx);
  const auto qctx = ctx + " question '" + q.id + "'";
  q.stem = field<std::string>(j, "stem", qctx);
  q.options = field<std::vector<std::string>>(j, "options", qctx);
  q.correct_index = field<int>(j, "correct_index", qctx);
  auto qtype = field<std::string>(j, "qtype", qctx);
  static const std::map<std::string, QuestionType> kTypes{
      {"context_clues", QuestionType::context_clues},
      {"sequence", QuestionType::sequence},
      {"conclusion", QuestionType::conclusion},
      {"prediction", QuestionType::prediction}};
  auto it = kTypes.find(qtype);
  if (it == kTypes.end()) throw ValidationError(qctx + ": unknown qtype '" + qtype + "'");
  q.qtype = it->second;
  return q;
}

inline Worksheet worksheet_from_json(const nlohmann::json& j, std::size_t position) {
  const auto ctx = "worksheet #" + std::to_string(position);
  if (!j.is_object()) throw ValidationError(ctx + ": must be an object");
  Worksheet w;
  w.id = field<std::string>(j, "id", ctx);
  const auto wctx = "worksheet '" + w.id + "'";
  w.title = field<std::string>(j, "title", wctx);
  w.grade_level = field<int>(j, "grade_level", wctx);
  w.fiction = field<bool>(j, "fiction", wctx);
  w.passage_text = field<std::string>(j, "passage_text", wctx);
  auto qs = j.find("questions");
  if (qs == j.end() || !qs->is_array()) throw ValidationError(wctx + ": 'questions' must be an array");
  for (const auto& qj : *qs) w.questions.push_back(question_from_json(qj, w.id));
  return w;
}

}  // namespace detail

/// Parse a worksheet document. Every returned worksheet has been validated.
inline std::vector<Worksheet> parse_worksheets(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("worksheet document is not valid JSON at " +
                      detail::line_col(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("worksheets") || !doc["worksheets"].is_array()) {
    throw FormatError("worksheet document must be an object with a 'worksheets' array");
  }
  std::vector<Worksheet> out;
  std::set<std::string> ids;
  std::size_t pos = 0;
  for (const auto& wj : doc["worksheets"]) {
    auto w = detail::worksheet_from_json(wj, pos++);
    validate(w);
    if (!ids.insert(w.id).second) throw ValidationError("duplicate worksheet id '" + w.id + "'");
    out.push_back(std::move(w));
  }
  return out;
}

inline std::vector<Worksheet> load_worksheets(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file '" + path.string() + "'");
  return parse_worksheets(io::read_file(path));
}

inline std::string serialize_worksheets(const std::vector<Worksheet>& worksheets) {
  ordered_json doc{{"worksheets", worksheets}};
  return doc.dump(2) + "\n";
}

inline const Worksheet* find_worksheet(const std::vector<Worksheet>& corpus, std::string_view id) {
  for (const auto& w : corpus) {
    if (w.id == id) return &w;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Statistics

inline CorpusStats corpus_stats(const std::vector<Worksheet>& worksheets) {
  if (worksheets.empty()) throw DomainError("corpus_stats requires at least one worksheet");
  CorpusStats s;
  s.worksheet_count = worksheets.size();
  s.min_passage_words = std::numeric_limits<std::size_t>::max();
  std::size_t total_words = 0;
  for (const auto& w : worksheets) {
    auto words = word_count(w.passage_text);
    total_words += words;
    s.min_passage_words = std::min(s.min_passage_words, words);
    s.max_passage_words = std::max(s.max_passage_words, words);
    s.question_count += w.questions.size();
    ++s.worksheets_per_grade[w.grade_level];
  }
  s.mean_passage_words = static_cast<double>(total_words) / static_cast<double>(worksheets.size());
  return s;
}

inline ordered_json to_json(const CorpusStats& s) {
  ordered_json grades = ordered_json::object();
  for (const auto& [grade, count] : s.worksheets_per_grade) grades[std::to_string(grade)] = count;
  return ordered_json{{"worksheet_count", s.worksheet_count},
                      {"question_count", s.question_count},
                      {"mean_passage_words", s.mean_passage_words},
                      {"min_passage_words", s.min_passage_words},
                      {"max_passage_words", s.max_passage_words},
                      {"worksheets_per_grade", grades}};
}

}  // namespace tutorgen::corpus
