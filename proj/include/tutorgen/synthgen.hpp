#pragma once

// Batch generation of synthetic tutoring dialogs over corpus x learner
// profiles x wrong options. Output is JSONL with one DialogRecord per line;
// a checkpoint file next to it lists completed session ids so interrupted
// jobs resume without duplicating work.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutorgen/corpus.hpp"
#include "tutorgen/dialog.hpp"
#include "tutorgen/error.hpp"
#include "tutorgen/io.hpp"
#include "tutorgen/llm.hpp"
#include "tutorgen/record.hpp"

namespace tutorgen::synthgen {

struct WrongOptionPolicy {
  enum class Kind { uniform_random, fixed, all };

  Kind kind = Kind::uniform_random;
  std::uint64_t seed = 0;
  int distractor = 0;  // fixed: position among the three incorrect options, in option order

  static WrongOptionPolicy all() { return {Kind::all, 0, 0}; }
  static WrongOptionPolicy random(std::uint64_t seed) { return {Kind::uniform_random, seed, 0}; }
  static WrongOptionPolicy fixed(int distractor) { return {Kind::fixed, 0, distractor}; }

  /// "all", "random:<seed>" or "fixed:<i>".
  static WrongOptionPolicy parse(std::string_view text) {
    auto num = [&](std::string_view digits) {
      std::string s(digits);
      char* end = nullptr;
      auto v = std::strtoull(s.c_str(), &end, 10);
      if (s.empty() || *end != '\0') throw ValidationError("bad policy '" + std::string(text) + "'");
      return v;
    };
    if (text == "all") return all();
    if (text.starts_with("random:")) return random(num(text.substr(7)));
    if (text.starts_with("fixed:")) {
      auto i = num(text.substr(6));
      if (i > 2) throw ValidationError("fixed policy index must be 0..2");
      return fixed(static_cast<int>(i));
    }
    throw ValidationError("bad policy '" + std::string(text) + "' (expected all|random:<seed>|fixed:<i>)");
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::all: return "all";
      case Kind::uniform_random: return "random:" + std::to_string(seed);
      case Kind::fixed: return "fixed:" + std::to_string(distractor);
    }
    return "all";
  }
};

struct GenerationJob {
  std::filesystem::path corpus_path;
  std::vector<std::string> profiles{"mia", "alex", "jordan", "isabella"};
  llm::BackendConfig tutor_backend;
  llm::BackendConfig student_backend;
  WrongOptionPolicy policy;
  std::filesystem::path output_path;
  int parallelism = 4;
  llm::GenerationParams tutor_params = llm::GenerationParams::tutor_defaults();
  llm::GenerationParams student_params = llm::GenerationParams::student_defaults();
  int max_tutor_turns = kDefaultMaxTutorTurns;
  std::string arm = "synthetic";

  void validate() const {
    if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
    if (profiles.empty()) throw ValidationError("at least one learner profile is required");
    for (const auto& p : profiles) dialog::find_profile(p);
    tutor_backend.validate();
    student_backend.validate();
    tutor_params.validate();
    student_params.validate();
  }
};

struct SessionSpec {
  std::string spec_id;
  std::size_t worksheet_index = 0;
  std::size_t question_index = 0;
  LearnerProfile profile;
  int wrong_option_index = 0;
};

inline std::vector<int> incorrect_options(const corpus::Question& q) {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(q.options.size()); ++i) {
    if (i != q.correct_index) out.push_back(i);
  }
  return out;
}

/// Deterministic enumeration in corpus order: worksheet, question, profile,
/// then wrong option(s) per policy. The random policy draws one incorrect
/// option per (question, profile) from a single seeded generator.
inline std::vector<SessionSpec> plan_sessions(const GenerationJob& job, const std::vector<corpus::Worksheet>& corpus) {
  if (corpus.empty()) throw DomainError("cannot plan sessions over an empty corpus");
  std::vector<LearnerProfile> profiles;
  for (const auto& name : job.profiles) profiles.push_back(dialog::find_profile(name));

  std::mt19937_64 rng(job.policy.seed);
  std::vector<SessionSpec> specs;
  for (std::size_t wi = 0; wi < corpus.size(); ++wi) {
    const auto& w = corpus[wi];
    for (std::size_t qi = 0; qi < w.questions.size(); ++qi) {
      const auto& q = w.questions[qi];
      auto wrong = incorrect_options(q);
      for (const auto& profile : profiles) {
        std::vector<int> chosen;
        switch (job.policy.kind) {
          case WrongOptionPolicy::Kind::all: chosen = wrong; break;
          case WrongOptionPolicy::Kind::fixed: chosen = {wrong.at(static_cast<std::size_t>(job.policy.distractor))}; break;
          case WrongOptionPolicy::Kind::uniform_random: chosen = {wrong[rng() % wrong.size()]}; break;
        }
        for (int opt : chosen) {
          specs.push_back(SessionSpec{w.id + "/" + q.id + "/" + to_lower_ascii(profile.name) + "/" + std::to_string(opt),
                                      wi, qi, profile, opt});
        }
      }
    }
  }
  return specs;
}

// ---------------------------------------------------------------------------
// Dataset files

inline std::string serialize_dataset(const std::vector<DialogRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_jsonl_line(r);
  return out;
}

inline std::vector<DialogRecord> parse_dataset(std::string_view text) {
  std::vector<DialogRecord> out;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    auto rec = parse_record_line(line, line_no);
    if (!ids.insert(rec.dialog_id).second) {
      throw FormatError("line " + std::to_string(line_no) + ": duplicate dialog_id '" + rec.dialog_id + "'");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<DialogRecord> read_dataset(const std::filesystem::path& path) {
  return parse_dataset(io::read_file(path));
}

inline void write_dataset(const std::vector<DialogRecord>& records, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_dataset(records));
}

// ---------------------------------------------------------------------------
// Job execution

struct FailedSession {
  std::string spec_id;
  std::string error;
};

struct JobReport {
  std::size_t planned = 0;
  std::size_t already_done = 0;  // completed by an earlier run
  std::size_t generated = 0;
  std::vector<FailedSession> failed;
  bool interrupted = false;
};

inline nlohmann::ordered_json to_json(const JobReport& r) {
  nlohmann::ordered_json failed = nlohmann::ordered_json::array();
  for (const auto& f : r.failed) failed.push_back({{"spec_id", f.spec_id}, {"error", f.error}});
  return {{"planned", r.planned},
          {"already_done", r.already_done},
          {"generated", r.generated},
          {"failed", failed},
          {"interrupted", r.interrupted}};
}

struct RunOptions {
  /// Stop taking work once this many new records have been written. Used to
  /// exercise resumption; a real interruption behaves the same on disk.
  std::optional<std::size_t> stop_after;
  bool quiet = false;
};

inline std::filesystem::path checkpoint_path(const std::filesystem::path& output) {
  auto p = output;
  p += ".checkpoint";
  return p;
}

namespace detail {

inline std::set<std::string> read_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  try {
    auto doc = nlohmann::json::parse(io::read_file(path));
    auto ids = doc.at("completed").get<std::vector<std::string>>();
    return {ids.begin(), ids.end()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("corrupt checkpoint '" + path.string() + "': " + e.what());
  }
}

inline void write_checkpoint(const std::filesystem::path& path, const std::set<std::string>& done) {
  nlohmann::json doc{{"completed", std::vector<std::string>(done.begin(), done.end())}};
  io::write_file_atomic(path, doc.dump() + "\n");
}

/// Drops a torn trailing line and re-appends a staged record that a crash
/// may have left unwritten. Returns the ids present afterwards.
inline std::set<std::string> recover_output(const std::filesystem::path& output) {
  std::set<std::string> ids;
  std::string text = std::filesystem::exists(output) ? io::read_file(output) : std::string{};
  if (!text.empty() && text.back() != '\n') {
    text.resize(text.rfind('\n') == std::string::npos ? 0 : text.rfind('\n') + 1);
    io::write_file_atomic(output, text);
  }
  for (const auto& r : parse_dataset(text)) ids.insert(r.dialog_id);

  auto staged = output;
  staged += ".pending";
  if (std::filesystem::exists(staged)) {
    auto line = io::read_file(staged);
    if (!line.empty() && line.back() == '\n') {
      auto rec = parse_record_line(std::string_view(line).substr(0, line.size() - 1), 1);
      if (ids.insert(rec.dialog_id).second) io::append_durable(output, line);
    }
    std::filesystem::remove(staged);
  }
  return ids;
}

inline bool is_stateful(const llm::BackendConfig& c) { return c.kind == llm::BackendKind::scripted; }

}  // namespace detail

/// Executes every planned session not already recorded. Scripted backends
/// are instantiated per session so each dialog replays its script from the
/// start; HTTP backends are shared across workers.
inline JobReport run_job(const GenerationJob& job, const RunOptions& options = {}) {
  job.validate();
  auto corpus = corpus::load_worksheets(job.corpus_path);
  auto specs = plan_sessions(job, corpus);

  JobReport report;
  report.planned = specs.size();

  auto done = detail::recover_output(job.output_path);
  for (const auto& id : detail::read_checkpoint(checkpoint_path(job.output_path))) done.insert(id);

  std::vector<const SessionSpec*> todo;
  for (const auto& s : specs) {
    if (done.count(s.spec_id)) {
      ++report.already_done;
    } else {
      todo.push_back(&s);
    }
  }

  std::shared_ptr<llm::ChatBackend> shared_tutor, shared_student;
  if (!detail::is_stateful(job.tutor_backend)) shared_tutor = llm::make_backend(job.tutor_backend);
  if (!detail::is_stateful(job.student_backend)) shared_student = llm::make_backend(job.student_backend);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex writer;
  std::exception_ptr io_failure;

  auto worker = [&] {
    while (!stop.load()) {
      auto i = next.fetch_add(1);
      if (i >= todo.size()) return;
      const auto& spec = *todo[i];
      const auto& w = corpus[spec.worksheet_index];
      const auto& q = w.questions[spec.question_index];

      std::string line;
      try {
        auto tutor = shared_tutor ? shared_tutor : std::shared_ptr<llm::ChatBackend>(llm::make_backend(job.tutor_backend));
        auto student =
            shared_student ? shared_student : std::shared_ptr<llm::ChatBackend>(llm::make_backend(job.student_backend));
        auto state = dialog::start_session(w, q, spec.wrong_option_index, spec.profile, now_ms(), job.max_tutor_turns);
        dialog::run_synthetic(state, *tutor, *student, job.tutor_params, job.student_params);
        line = to_jsonl_line(dialog::freeze(state, spec.spec_id, job.arm, tutor->model_name()));
      } catch (const std::exception& e) {
        std::lock_guard lock(writer);
        report.failed.push_back({spec.spec_id, e.what()});
        if (!options.quiet) std::clog << "synthgen: session " << spec.spec_id << " skipped: " << e.what() << "\n";
        continue;
      }

      std::lock_guard lock(writer);
      if (stop.load()) return;
      try {
        io::append_durable(job.output_path, line);
        done.insert(spec.spec_id);
        detail::write_checkpoint(checkpoint_path(job.output_path), done);
      } catch (...) {
        io_failure = std::current_exception();
        stop.store(true);
        return;
      }
      ++report.generated;
      if (options.stop_after && report.generated >= *options.stop_after) {
        report.interrupted = report.generated < todo.size();
        stop.store(true);
      }
    }
  };

  {
    std::vector<std::jthread> pool;
    auto n = std::min<std::size_t>(static_cast<std::size_t>(job.parallelism), std::max<std::size_t>(todo.size(), 1));
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (io_failure) std::rethrow_exception(io_failure);
  if (!std::filesystem::exists(job.output_path)) io::write_file(job.output_path, "");
  return report;
}

}  // namespace tutorgen::synthgen
