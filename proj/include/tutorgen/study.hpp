#pragma once

// Interactive A/B tutoring study: participants take a worksheet, wrong
// answers open a live dialog with the tutor of their arm, and helpfulness
// and per-dialog ratings are collected. State lives in a SQLite file in WAL
// mode; every mutating request is one transaction.

#include <algorithm>
#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutorgen/corpus.hpp"
#include "tutorgen/dialog.hpp"
#include "tutorgen/error.hpp"
#include "tutorgen/io.hpp"
#include "tutorgen/llm.hpp"
#include "tutorgen/metrics.hpp"
#include "tutorgen/record.hpp"
#include "tutorgen/sqlite.hpp"
#include "tutorgen/synthgen.hpp"

namespace tutorgen::study {

using ordered_json = nlohmann::ordered_json;

inline const std::vector<std::string>& arm_names() {
  static const std::vector<std::string> kArms{"A", "B"};
  return kArms;
}

enum class QuestionState { unanswered, correct, in_dialog, resolved };

inline std::string_view to_string(QuestionState s) {
  switch (s) {
    case QuestionState::unanswered: return "unanswered";
    case QuestionState::correct: return "correct";
    case QuestionState::in_dialog: return "in_dialog";
    case QuestionState::resolved: return "resolved";
  }
  return "unanswered";
}

inline QuestionState question_state_from_string(std::string_view s) {
  if (s == "unanswered") return QuestionState::unanswered;
  if (s == "correct") return QuestionState::correct;
  if (s == "in_dialog") return QuestionState::in_dialog;
  if (s == "resolved") return QuestionState::resolved;
  throw FormatError("unknown question state '" + std::string(s) + "'");
}

struct StudyConfig {
  std::filesystem::path corpus_path;
  std::string store_path = "study.db";
  std::map<std::string, llm::BackendConfig> arms;  // "A", "B"
  llm::GenerationParams tutor_params = llm::GenerationParams::tutor_defaults();
  int max_tutor_turns = kDefaultMaxTutorTurns;
  std::optional<std::filesystem::path> static_dir;

  void validate() const {
    for (const auto& a : arm_names()) {
      auto it = arms.find(a);
      if (it == arms.end()) throw ValidationError("study config needs a backend for arm " + a);
      it->second.validate();
    }
    tutor_params.validate();
    if (max_tutor_turns < 1) throw ValidationError("max_tutor_turns must be >= 1");
  }

  /// Relative paths are resolved against `base_dir`.
  static StudyConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    StudyConfig c;
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    try {
      c.corpus_path = resolve(j.at("corpus").get<std::string>());
      auto store = j.value("store", std::string("study.db"));
      c.store_path = store == ":memory:" ? store : resolve(store).string();
      for (const auto& [name, cfg] : j.at("arms").items()) c.arms[name] = cfg.get<llm::BackendConfig>();
      c.max_tutor_turns = j.value("max_tutor_turns", kDefaultMaxTutorTurns);
      if (auto it = j.find("tutor_params"); it != j.end()) {
        c.tutor_params.temperature = it->value("temperature", c.tutor_params.temperature);
        c.tutor_params.max_tokens = it->value("max_tokens", c.tutor_params.max_tokens);
        c.tutor_params.stop_sequences = it->value("stop", std::vector<std::string>{});
      }
      if (auto it = j.find("static_dir"); it != j.end() && !it->is_null()) c.static_dir = resolve(it->get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("bad study config: ") + e.what());
    }
    c.validate();
    return c;
  }
};

struct StudySession {
  std::string session_id;
  std::string participant_id;
  std::string worksheet_id;
  std::string arm;
  Instant created_at{};
  std::map<std::string, QuestionState> questions;
  std::map<std::string, std::string> dialogs;  // question id -> dialog id
};

struct AnswerResult {
  bool correct = false;
  std::optional<std::string> dialog_id;
  std::optional<std::string> tutor_reply;
  std::optional<SessionStatus> status;
};

struct MessageResult {
  std::string tutor_reply;
  SessionStatus status = SessionStatus::active;
};

struct DialogTiming {
  std::string dialog_id;
  std::string session_id;
  std::string arm;
  Instant started_at{};
  Instant ended_at{};
  double duration_seconds = 0.0;
};

/// Exported files keyed by file name.
using ExportBundle = std::map<std::string, std::string>;

inline constexpr const char* kTimingsHeader = "dialog_id,session_id,arm,started_at,ended_at,duration_seconds";
inline constexpr const char* kHelpfulnessHeader = "session_id,participant_id,arm,score,submitted_at";

class StudyService {
 public:
  using Clock = std::function<Instant()>;

  StudyService(StudyConfig config, std::vector<corpus::Worksheet> corpus, Clock clock = now_ms)
      : config_(std::move(config)), corpus_(std::move(corpus)), clock_(std::move(clock)), db_(config_.store_path) {
    config_.validate();
    init_schema();
    for (const auto& [arm, cfg] : config_.arms) {
      if (cfg.kind == llm::BackendKind::http) shared_backends_[arm] = llm::make_backend(cfg);
    }
  }

  static StudyService from_config(StudyConfig config, Clock clock = now_ms) {
    auto corpus = corpus::load_worksheets(config.corpus_path);
    return StudyService(std::move(config), std::move(corpus), std::move(clock));
  }

  StudyService(StudyService&&) = delete;

  const std::vector<corpus::Worksheet>& worksheets() const { return corpus_; }
  const StudyConfig& config() const { return config_; }

  // -------------------------------------------------------------------------
  // Sessions

  /// Arms alternate A, B, A, ... per worksheet.
  StudySession create_session(const std::string& participant_id, const std::string& worksheet_id) {
    if (participant_id.empty()) throw ValidationError("participant_id must be non-empty");
    const auto& w = worksheet(worksheet_id);
    StudySession s;
    s.session_id = new_id("s");
    s.participant_id = participant_id;
    s.worksheet_id = worksheet_id;
    s.created_at = clock_();

    std::lock_guard db_lock(db_mu_);
    sqlite::Transaction tx(db_);
    {
      sqlite::Statement q(db_,
                          "SELECT session_id FROM sessions WHERE participant_id=?1 AND worksheet_id=?2 AND completed=0");
      q.bind(1, participant_id).bind(2, worksheet_id);
      if (q.step()) throw ConflictError("participant already has an active session for this worksheet");
    }
    long long next = 0;
    {
      sqlite::Statement q(db_, "SELECT next FROM arm_counters WHERE worksheet_id=?1");
      q.bind(1, worksheet_id);
      if (q.step()) next = q.integer(0);
    }
    s.arm = arm_names()[static_cast<std::size_t>(next % 2)];
    sqlite::Statement(db_, "INSERT INTO arm_counters(worksheet_id, next) VALUES(?1, ?2) "
                           "ON CONFLICT(worksheet_id) DO UPDATE SET next=excluded.next")
        .bind(1, worksheet_id)
        .bind(2, next + 1)
        .run();
    sqlite::Statement(db_, "INSERT INTO sessions(session_id, participant_id, worksheet_id, arm, created_at) "
                           "VALUES(?1, ?2, ?3, ?4, ?5)")
        .bind(1, s.session_id)
        .bind(2, participant_id)
        .bind(3, worksheet_id)
        .bind(4, s.arm)
        .bind(5, format_instant(s.created_at))
        .run();
    for (const auto& q : w.questions) {
      s.questions[q.id] = QuestionState::unanswered;
      sqlite::Statement(db_, "INSERT INTO question_states(session_id, question_id, state) VALUES(?1, ?2, ?3)")
          .bind(1, s.session_id)
          .bind(2, q.id)
          .bind(3, to_string(QuestionState::unanswered))
          .run();
    }
    tx.commit();
    return s;
  }

  StudySession get_session(const std::string& session_id) {
    std::lock_guard db_lock(db_mu_);
    return load_session(session_id);
  }

  /// Correct answers resolve immediately; a wrong answer opens a dialog
  /// whose first tutor reply is generated before returning.
  AnswerResult submit_answer(const std::string& session_id, const std::string& question_id, int option_index) {
    auto lock = lock_session(session_id);
    StudySession s;
    {
      std::lock_guard db_lock(db_mu_);
      s = load_session(session_id);
    }
    const auto& w = worksheet(s.worksheet_id);
    const auto* q = w.find_question(question_id);
    if (q == nullptr) throw NotFoundError("unknown question '" + question_id + "'");
    if (option_index < 0 || option_index >= static_cast<int>(q->options.size())) {
      throw ValidationError("option_index must be in 0..3");
    }
    switch (s.questions.at(question_id)) {
      case QuestionState::unanswered: break;
      case QuestionState::in_dialog: throw ConflictError("a dialog is already active for this question");
      case QuestionState::correct:
      case QuestionState::resolved: throw ConflictError("question already resolved");
    }

    AnswerResult result;
    if (option_index == q->correct_index) {
      result.correct = true;
      std::lock_guard db_lock(db_mu_);
      sqlite::Transaction tx(db_);
      set_question_state(session_id, question_id, QuestionState::correct, std::nullopt);
      tx.commit();
      return result;
    }

    auto now = clock_();
    auto state = dialog::start_session(w, *q, option_index, std::nullopt, now, config_.max_tutor_turns);
    auto dialog_id = new_id("d");
    auto backend = backend_for(s.arm, dialog_id, 0);
    auto reply = dialog::tutor_step(state, *backend, config_.tutor_params, clock_());

    {
      std::lock_guard db_lock(db_mu_);
      sqlite::Transaction tx(db_);
      sqlite::Statement(db_, "INSERT INTO dialogs(dialog_id, session_id, question_id, arm, model_name, state_json, "
                             "status, started_at) VALUES(?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)")
          .bind(1, dialog_id)
          .bind(2, session_id)
          .bind(3, question_id)
          .bind(4, s.arm)
          .bind(5, backend->model_name())
          .bind(6, to_json(state).dump())
          .bind(7, to_string(state.status))
          .bind(8, format_instant(state.started_at))
          .run();
      if (state.closed()) record_close(dialog_id, state);
      set_question_state(session_id, question_id, state.closed() ? QuestionState::resolved : QuestionState::in_dialog,
                         dialog_id);
      tx.commit();
    }
    if (state.closed()) drop_backend(dialog_id);
    result.dialog_id = dialog_id;
    result.tutor_reply = reply;
    result.status = state.status;
    return result;
  }

  /// Student message followed by the next tutor turn. A backend failure
  /// leaves the stored dialog unchanged.
  MessageResult post_message(const std::string& dialog_id, const std::string& text) {
    auto session_id = session_of_dialog(dialog_id);
    auto lock = lock_session(session_id);
    DialogRow row;
    {
      std::lock_guard db_lock(db_mu_);
      row = load_dialog(dialog_id);
    }
    auto& state = row.state;
    if (state.closed()) throw ConflictError("dialog is closed");
    dialog::apply_student_message(state, text, clock_());
    auto backend = backend_for(row.arm, dialog_id, static_cast<std::size_t>(state.tutor_turns));
    MessageResult result;
    result.tutor_reply = dialog::tutor_step(state, *backend, config_.tutor_params, clock_());
    result.status = state.status;

    {
      std::lock_guard db_lock(db_mu_);
      sqlite::Transaction tx(db_);
      sqlite::Statement(db_, "UPDATE dialogs SET state_json=?2, status=?3 WHERE dialog_id=?1")
          .bind(1, dialog_id)
          .bind(2, to_json(state).dump())
          .bind(3, to_string(state.status))
          .run();
      if (state.closed()) {
        record_close(dialog_id, state);
        set_question_state(row.session_id, row.question_id, QuestionState::resolved, dialog_id);
      }
      tx.commit();
    }
    if (state.closed()) drop_backend(dialog_id);
    return result;
  }

  void submit_helpfulness(const std::string& session_id, int score) {
    metrics::require_likert(score, "helpfulness score");
    auto lock = lock_session(session_id);
    std::lock_guard db_lock(db_mu_);
    auto s = load_session(session_id);
    bool any_resolved = std::any_of(s.questions.begin(), s.questions.end(),
                                    [](const auto& kv) { return kv.second == QuestionState::resolved; });
    if (!any_resolved) throw ConflictError("helpfulness requires at least one resolved dialog");
    sqlite::Transaction tx(db_);
    {
      sqlite::Statement q(db_, "SELECT 1 FROM helpfulness WHERE session_id=?1");
      q.bind(1, session_id);
      if (q.step()) throw ConflictError("helpfulness already submitted for this session");
    }
    sqlite::Statement(db_, "INSERT INTO helpfulness(session_id, score, submitted_at) VALUES(?1, ?2, ?3)")
        .bind(1, session_id)
        .bind(2, score)
        .bind(3, format_instant(clock_()))
        .run();
    sqlite::Statement(db_, "UPDATE sessions SET completed=1 WHERE session_id=?1").bind(1, session_id).run();
    tx.commit();
  }

  /// Returns true when an earlier rating by the same rater was replaced.
  bool submit_dialog_rating(const std::string& dialog_id, const std::string& rater_id, std::array<int, 4> scores) {
    metrics::RatingRecord rating{dialog_id, rater_id, scores};
    rating.validate();
    std::lock_guard db_lock(db_mu_);
    auto row = load_dialog(dialog_id);
    if (!row.state.closed()) throw ConflictError("dialog is still open");
    sqlite::Transaction tx(db_);
    bool existed = false;
    {
      sqlite::Statement q(db_, "SELECT 1 FROM ratings WHERE dialog_id=?1 AND rater_id=?2");
      q.bind(1, dialog_id).bind(2, rater_id);
      existed = q.step();
    }
    auto now = format_instant(clock_());
    sqlite::Statement(db_, "INSERT INTO ratings(dialog_id, rater_id, care, coherence, correctness, gmsl, created_at, "
                           "updated_at) VALUES(?1, ?2, ?3, ?4, ?5, ?6, ?7, ?7) "
                           "ON CONFLICT(dialog_id, rater_id) DO UPDATE SET care=excluded.care, "
                           "coherence=excluded.coherence, correctness=excluded.correctness, gmsl=excluded.gmsl, "
                           "updated_at=excluded.updated_at")
        .bind(1, dialog_id)
        .bind(2, rater_id)
        .bind(3, scores[0])
        .bind(4, scores[1])
        .bind(5, scores[2])
        .bind(6, scores[3])
        .bind(7, now)
        .run();
    tx.commit();
    return existed;
  }

  SessionState dialog_state(const std::string& dialog_id) {
    std::lock_guard db_lock(db_mu_);
    return load_dialog(dialog_id).state;
  }

  // -------------------------------------------------------------------------
  // Export

  std::vector<DialogRecord> closed_dialogs() {
    std::lock_guard db_lock(db_mu_);
    std::vector<DialogRecord> out;
    sqlite::Statement q(db_, "SELECT dialog_id, arm, model_name, state_json FROM dialogs "
                             "WHERE status != 'active' ORDER BY started_at, dialog_id");
    while (q.step()) {
      auto state = session_from_json(nlohmann::json::parse(q.text(3)));
      out.push_back(dialog::freeze(state, q.text(0), q.text(1), q.text(2)));
    }
    return out;
  }

  std::vector<metrics::RatingRecord> ratings() {
    std::lock_guard db_lock(db_mu_);
    std::vector<metrics::RatingRecord> out;
    sqlite::Statement q(db_, "SELECT dialog_id, rater_id, care, coherence, correctness, gmsl FROM ratings "
                             "ORDER BY dialog_id, rater_id");
    while (q.step()) {
      out.push_back({q.text(0), q.text(1),
                     {static_cast<int>(q.integer(2)), static_cast<int>(q.integer(3)), static_cast<int>(q.integer(4)),
                      static_cast<int>(q.integer(5))}});
    }
    return out;
  }

  std::vector<DialogTiming> timings() {
    std::lock_guard db_lock(db_mu_);
    std::vector<DialogTiming> out;
    sqlite::Statement q(db_, "SELECT dialog_id, session_id, arm, started_at, ended_at, duration_seconds FROM dialogs "
                             "WHERE status != 'active' ORDER BY started_at, dialog_id");
    while (q.step()) {
      out.push_back({q.text(0), q.text(1), q.text(2), parse_instant(q.text(3)), parse_instant(q.text(4)), q.real(5)});
    }
    return out;
  }

  ExportBundle export_bundle() {
    ExportBundle files;
    auto dataset = closed_dialogs();
    files["dataset.jsonl"] = synthgen::serialize_dataset(dataset);
    files["ratings.csv"] = metrics::ratings_to_csv(ratings());

    std::string timing_csv = std::string(kTimingsHeader) + "\n";
    std::map<std::string, std::pair<double, std::size_t>> per_arm;
    for (const auto& t : timings()) {
      timing_csv += metrics::csv::field(t.dialog_id) + "," + metrics::csv::field(t.session_id) + "," +
                    metrics::csv::field(t.arm) + "," + format_instant(t.started_at) + "," +
                    format_instant(t.ended_at) + "," + metrics::format_number(t.duration_seconds) + "\n";
      per_arm[t.arm].first += t.duration_seconds;
      ++per_arm[t.arm].second;
    }
    files["timings.csv"] = timing_csv;

    std::string help_csv = std::string(kHelpfulnessHeader) + "\n";
    {
      std::lock_guard db_lock(db_mu_);
      sqlite::Statement q(db_, "SELECT h.session_id, s.participant_id, s.arm, h.score, h.submitted_at "
                               "FROM helpfulness h JOIN sessions s ON s.session_id = h.session_id "
                               "ORDER BY h.submitted_at, h.session_id");
      while (q.step()) {
        help_csv += metrics::csv::field(q.text(0)) + "," + metrics::csv::field(q.text(1)) + "," +
                    metrics::csv::field(q.text(2)) + "," + std::to_string(q.integer(3)) + "," + q.text(4) + "\n";
      }
    }
    files["helpfulness.csv"] = help_csv;

    ordered_json arms = ordered_json::object();
    for (const auto& a : arm_names()) {
      auto it = per_arm.find(a);
      auto n = it == per_arm.end() ? 0 : it->second.second;
      arms[a] = ordered_json{{"closed_dialogs", n},
                             {"mean_duration_seconds", n == 0 ? ordered_json(nullptr)
                                                              : ordered_json(it->second.first / static_cast<double>(n))}};
    }
    files["summary.json"] = ordered_json{{"arms", arms}}.dump(2) + "\n";
    return files;
  }

  void export_study(const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    for (const auto& [name, contents] : export_bundle()) io::write_file(out_dir / name, contents);
  }

 private:
  struct DialogRow {
    std::string session_id;
    std::string question_id;
    std::string arm;
    SessionState state;
  };

  void init_schema() {
    if (config_.store_path != ":memory:") db_.exec("PRAGMA journal_mode=WAL");
    db_.exec("PRAGMA synchronous=FULL");
    db_.exec(R"sql(
      CREATE TABLE IF NOT EXISTS arm_counters(
        worksheet_id TEXT PRIMARY KEY,
        next INTEGER NOT NULL);
      CREATE TABLE IF NOT EXISTS sessions(
        session_id TEXT PRIMARY KEY,
        participant_id TEXT NOT NULL,
        worksheet_id TEXT NOT NULL,
        arm TEXT NOT NULL,
        created_at TEXT NOT NULL,
        completed INTEGER NOT NULL DEFAULT 0);
      CREATE TABLE IF NOT EXISTS question_states(
        session_id TEXT NOT NULL,
        question_id TEXT NOT NULL,
        state TEXT NOT NULL,
        dialog_id TEXT,
        PRIMARY KEY(session_id, question_id));
      CREATE TABLE IF NOT EXISTS dialogs(
        dialog_id TEXT PRIMARY KEY,
        session_id TEXT NOT NULL,
        question_id TEXT NOT NULL,
        arm TEXT NOT NULL,
        model_name TEXT NOT NULL,
        state_json TEXT NOT NULL,
        status TEXT NOT NULL,
        started_at TEXT NOT NULL,
        ended_at TEXT,
        duration_seconds REAL);
      CREATE TABLE IF NOT EXISTS ratings(
        dialog_id TEXT NOT NULL,
        rater_id TEXT NOT NULL,
        care INTEGER NOT NULL,
        coherence INTEGER NOT NULL,
        correctness INTEGER NOT NULL,
        gmsl INTEGER NOT NULL,
        created_at TEXT NOT NULL,
        updated_at TEXT NOT NULL,
        PRIMARY KEY(dialog_id, rater_id));
      CREATE TABLE IF NOT EXISTS helpfulness(
        session_id TEXT PRIMARY KEY,
        score INTEGER NOT NULL,
        submitted_at TEXT NOT NULL);
    )sql");
  }

  const corpus::Worksheet& worksheet(const std::string& id) const {
    const auto* w = corpus::find_worksheet(corpus_, id);
    if (w == nullptr) throw NotFoundError("unknown worksheet '" + id + "'");
    return *w;
  }

  std::string new_id(const char* prefix) {
    std::lock_guard lock(rng_mu_);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out = std::string(prefix) + "-";
    auto v = rng_();
    for (int i = 0; i < 16; ++i) out.push_back(kHex[(v >> (i * 4)) & 0xF]);
    return out;
  }

  std::unique_lock<std::mutex> lock_session(const std::string& session_id) {
    std::shared_ptr<std::mutex> m;
    {
      std::lock_guard lock(locks_mu_);
      auto& slot = session_locks_[session_id];
      if (!slot) slot = std::make_shared<std::mutex>();
      m = slot;
    }
    // Session mutexes are never erased, so the mutex outlives the lock.
    return std::unique_lock(*m);
  }

  StudySession load_session(const std::string& session_id) {
    StudySession s;
    {
      sqlite::Statement q(db_, "SELECT participant_id, worksheet_id, arm, created_at FROM sessions WHERE session_id=?1");
      q.bind(1, session_id);
      if (!q.step()) throw NotFoundError("unknown session '" + session_id + "'");
      s.session_id = session_id;
      s.participant_id = q.text(0);
      s.worksheet_id = q.text(1);
      s.arm = q.text(2);
      s.created_at = parse_instant(q.text(3));
    }
    sqlite::Statement q(db_, "SELECT question_id, state, dialog_id FROM question_states WHERE session_id=?1");
    q.bind(1, session_id);
    while (q.step()) {
      s.questions[q.text(0)] = question_state_from_string(q.text(1));
      if (!q.is_null(2)) s.dialogs[q.text(0)] = q.text(2);
    }
    return s;
  }

  DialogRow load_dialog(const std::string& dialog_id) {
    sqlite::Statement q(db_, "SELECT session_id, question_id, arm, state_json FROM dialogs WHERE dialog_id=?1");
    q.bind(1, dialog_id);
    if (!q.step()) throw NotFoundError("unknown dialog '" + dialog_id + "'");
    return DialogRow{q.text(0), q.text(1), q.text(2), session_from_json(nlohmann::json::parse(q.text(3)))};
  }

  std::string session_of_dialog(const std::string& dialog_id) {
    std::lock_guard db_lock(db_mu_);
    sqlite::Statement q(db_, "SELECT session_id FROM dialogs WHERE dialog_id=?1");
    q.bind(1, dialog_id);
    if (!q.step()) throw NotFoundError("unknown dialog '" + dialog_id + "'");
    return q.text(0);
  }

  void set_question_state(const std::string& session_id, const std::string& question_id, QuestionState state,
                          const std::optional<std::string>& dialog_id) {
    sqlite::Statement(db_, "UPDATE question_states SET state=?3, dialog_id=COALESCE(?4, dialog_id) "
                           "WHERE session_id=?1 AND question_id=?2")
        .bind(1, session_id)
        .bind(2, question_id)
        .bind(3, to_string(state))
        .bind(4, dialog_id)
        .run();
  }

  void record_close(const std::string& dialog_id, const SessionState& state) {
    sqlite::Statement(db_, "UPDATE dialogs SET ended_at=?2, duration_seconds=?3 WHERE dialog_id=?1")
        .bind(1, dialog_id)
        .bind(2, format_instant(*state.ended_at))
        .bind(3, std::max(0.0, seconds_between(state.started_at, *state.ended_at)))
        .run();
  }

  /// HTTP backends are shared per arm; scripted ones are created per dialog
  /// so every dialog replays its script from the start. A scripted backend
  /// rebuilt mid-dialog (e.g. after a restart) skips the replies already used.
  std::shared_ptr<llm::ChatBackend> backend_for(const std::string& arm, const std::string& dialog_id,
                                                std::size_t used_replies) {
    std::lock_guard lock(backends_mu_);
    if (auto it = shared_backends_.find(arm); it != shared_backends_.end()) return it->second;
    auto& slot = dialog_backends_[dialog_id];
    if (!slot) {
      auto cfg = config_.arms.at(arm);
      cfg.script.erase(cfg.script.begin(),
                       cfg.script.begin() + static_cast<std::ptrdiff_t>(std::min(used_replies, cfg.script.size())));
      slot = std::make_shared<llm::ScriptedBackend>(std::move(cfg.script), cfg.model_name, cfg.latency);
    }
    return slot;
  }

  void drop_backend(const std::string& dialog_id) {
    std::lock_guard lock(backends_mu_);
    dialog_backends_.erase(dialog_id);
  }

  StudyConfig config_;
  std::vector<corpus::Worksheet> corpus_;
  Clock clock_;

  std::mutex db_mu_;
  sqlite::Database db_;

  std::mutex locks_mu_;
  std::map<std::string, std::shared_ptr<std::mutex>> session_locks_;

  std::mutex backends_mu_;
  std::map<std::string, std::shared_ptr<llm::ChatBackend>> shared_backends_;
  std::map<std::string, std::shared_ptr<llm::ChatBackend>> dialog_backends_;

  std::mutex rng_mu_;
  std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace tutorgen::study
