#pragma once

// Tutoring-session state machine: prompt construction for the tutor and
// student agents, turn alternation with sentence caps, and termination on
// the success phrase or the tutor-turn cap. Works in synthetic mode (LLM
// student driven by a learner profile) and interactive mode (human student).

#include <algorithm>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "tutorgen/corpus.hpp"
#include "tutorgen/error.hpp"
#include "tutorgen/llm.hpp"
#include "tutorgen/record.hpp"
#include "tutorgen/text.hpp"

namespace tutorgen::dialog {

using llm::ChatMessage;
using llm::Role;

inline constexpr int kTutorSentenceCap = 3;
inline constexpr int kStudentSentenceCap = 1;

inline constexpr std::string_view kTutorPrompt =
    R"(As an English tutor, your role is to help young learners improve their reading and understanding skills. The student has chosen an incorrect answer. Your goal is to guide them to find the correct answer, by thinking deeply and looking for clues in the text. When they get it right, say: 'Exactly! That's the right answer. You can now close this tab and continue with the rest of your worksheet.' Use easy words and encourage them to ask questions and think creatively. Help them connect the dots without giving the answer directly. Remember, short sentences and clear hints are key.)";

inline constexpr std::string_view kSuccessPhrase =
    "Exactly! That's the right answer. You can now close this tab and continue with the rest of your worksheet.";

// ---------------------------------------------------------------------------
// Learner profiles

inline const std::vector<LearnerProfile>& builtin_profiles() {
  static const std::vector<LearnerProfile> kProfiles{
      {"Mia",
       R"(You are Mia, a reflective learner.  You are 8 years old and you enjoy taking time to understand concepts deeply and reflectively. Learning Style Description: You prefer to pause and think deeply about the material before responding. You value understanding the 'why' behind answers and enjoy when explanations help make connections. Goal: To gain a deeper understanding of reading material through reflective thinking and to connect new information with existing knowledge. DO: Use short sentences and easy words. Reflect on the tutor’s hints and questions, asking for time to think if needed. Seek clarifications for a deeper understanding, not just for the right answer. Share your thought process, showing how you arrive at conclusions. DO NOT: Speak in full sentences.  Rush to answer. It’s okay to express when you need a moment to think.)"},
      {"Alex",
       R"(You are Alex, a quick thinker. You are 8 years old, confident and quick to respond, often relying on intuition. Learning Style Description: You answer questions quickly, based on first instincts, but may miss finer details requiring analytical thought. Goal: To balance quick, intuitive thinking with a deeper analysis when necessary. DO: Use short sentences and easy words.  Respond swiftly to questions, showcasing your instinctual understanding. Show confidence in your responses but be open to revisiting them when new information is presented. DO NOT: Speak in full sentences. Hesitate to share your first thought, even if you might reconsider it later.)"},
      {"Jordan",
       R"(You are Jordan, a curious explorer. You are 8 years old, naturally curious and enjoy exploring topics in depth, often going beyond the immediate scope of the lesson. Learning Style Description: You prefer interactive learning where you can ask questions and explore various answers. You enjoy problem-solving and are not afraid of making mistakes as part of the learning process. Goal: To engage deeply with content through exploration and questioning, using mistakes as learning opportunities. DO: Use short sentences and easy words. Ask lots of questions, showing a desire to explore topics deeply. Offer guesses and hypotheses about the material, even if unsure. Embrace corrections and hints as part of the learning journey. DO NOT: Avoid giving short, conclusive answers without exploration. Shy away from admitting confusion or misunderstandings.)"},
      {"Isabella",
       R"(You are Isabella, a systematic thinker. You are 8 years old, you prefer a structured approach to learning, enjoy organizing information, and work best when tasks are broken down into clear, manageable steps. Learning Style Description: You thrive on clarity and structure, you often use lists to organize thoughts, and appreciate learning materials that are logically sequenced. Goal: To understand and master new content through a systematic, step-by-step approach that builds on clear foundations. DO: Use short sentences and easy words. Request that complex concepts be broken down into simpler steps or components. Use logical reasoning in responses, reflecting a structured thought process. Appreciate when feedback or hints are given in a clear, sequential order. DO NOT: Speak in full sentences. Jump to advanced topics without mastering foundational ones. Respond well to ambiguous or overly broad questions without clear direction.)"},
  };
  return kProfiles;
}

/// Case-insensitive lookup by name ("jordan" finds Jordan).
inline const LearnerProfile& find_profile(std::string_view name) {
  auto wanted = to_lower_ascii(name);
  for (const auto& p : builtin_profiles()) {
    if (to_lower_ascii(p.name) == wanted) return p;
  }
  throw ValidationError("unknown learner profile '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Prompt construction

inline char option_letter(std::size_t i) { return static_cast<char>('A' + i); }

inline std::string options_block(const Grounding& g) {
  std::string out = "Options:";
  for (std::size_t i = 0; i < g.options.size(); ++i) {
    out += "\n";
    out += option_letter(i);
    out += ") ";
    out += g.options[i];
  }
  return out;
}

/// Tutor system message: fixed instruction followed by the labeled
/// Passage / Question / Options / Correct answer blocks.
inline std::string tutor_system_prompt(const Grounding& g) {
  std::string out(kTutorPrompt);
  out += "\n\nPassage:\n" + g.passage_text;
  out += "\n\nQuestion: " + g.question_stem;
  out += "\n\n" + options_block(g);
  out += "\n\nCorrect answer: ";
  out += option_letter(static_cast<std::size_t>(g.correct_index));
  out += ") " + g.correct_option();
  return out;
}

/// Student system message. Lists the options without marking any of them;
/// the correct answer is never disclosed.
inline std::string student_system_prompt(const LearnerProfile& profile, const Grounding& g,
                                         int first_choice) {
  std::string out = profile.system_prompt;
  out += "\n\nPassage:\n" + g.passage_text;
  out += "\n\nQuestion: " + g.question_stem;
  out += "\n\n" + options_block(g);
  out += "\n\nYour first answer was: ";
  out += option_letter(static_cast<std::size_t>(first_choice));
  out += ") " + g.options.at(static_cast<std::size_t>(first_choice));
  out += "\n\nThe tutor is helping you with this question. Reply to the tutor in one sentence.";
  return out;
}

inline std::vector<ChatMessage> build_tutor_messages(const SessionState& state) {
  if (state.closed()) throw ProtocolError("session closed");
  if (state.history.empty() || state.last_turn().speaker != Speaker::student) {
    throw ProtocolError("tutor messages require the last turn to be a student turn");
  }
  std::vector<ChatMessage> msgs;
  msgs.reserve(state.history.size() + 1);
  msgs.push_back({Role::system, tutor_system_prompt(state.grounding)});
  for (const auto& t : state.history) {
    msgs.push_back({t.speaker == Speaker::student ? Role::user : Role::assistant, t.text});
  }
  return msgs;
}

/// Student view of the dialog: the opening choice lives in the system
/// message, tutor turns arrive as user messages and the student's own later
/// turns as assistant messages.
inline std::vector<ChatMessage> build_student_messages(const SessionState& state) {
  if (state.interactive()) throw ProtocolError("student messages are only built in synthetic mode");
  if (state.closed()) throw ProtocolError("session closed");
  if (state.history.empty() || state.last_turn().speaker != Speaker::tutor) {
    throw ProtocolError("student messages require the last turn to be a tutor turn");
  }
  std::vector<ChatMessage> msgs;
  msgs.reserve(state.history.size());
  msgs.push_back({Role::system, student_system_prompt(*state.profile, state.grounding, state.wrong_option_index)});
  for (std::size_t i = 1; i < state.history.size(); ++i) {
    const auto& t = state.history[i];
    msgs.push_back({t.speaker == Speaker::tutor ? Role::user : Role::assistant, t.text});
  }
  return msgs;
}

// ---------------------------------------------------------------------------
// Termination

inline bool detect_success_phrase(std::string_view text) {
  static const std::regex kPattern("close th(is|e) tab", std::regex::icase | std::regex::ECMAScript);
  return std::regex_search(text.begin(), text.end(), kPattern);
}

/// Success wins over the turn cap when both apply on the same tutor turn.
inline SessionStatus check_termination(const SessionState& state) {
  auto last_tutor = std::find_if(state.history.rbegin(), state.history.rend(),
                                 [](const Turn& t) { return t.speaker == Speaker::tutor; });
  if (last_tutor != state.history.rend() && detect_success_phrase(last_tutor->text)) {
    return SessionStatus::success;
  }
  if (state.tutor_turns >= state.max_tutor_turns) return SessionStatus::turn_limit;
  return SessionStatus::active;
}

// ---------------------------------------------------------------------------
// Steps

inline SessionState start_session(const corpus::Worksheet& worksheet, const corpus::Question& question,
                                  int wrong_option_index, std::optional<LearnerProfile> profile,
                                  Instant now = now_ms(), int max_tutor_turns = kDefaultMaxTutorTurns) {
  if (wrong_option_index < 0 || wrong_option_index >= static_cast<int>(question.options.size())) {
    throw ValidationError("wrong_option_index out of range");
  }
  if (wrong_option_index == question.correct_index) {
    throw DomainError("initial choice must be incorrect");
  }
  if (max_tutor_turns < 1) throw ValidationError("max_tutor_turns must be >= 1");
  SessionState s;
  s.worksheet_id = worksheet.id;
  s.question_id = question.id;
  s.grounding = Grounding::from(worksheet, question);
  s.profile = std::move(profile);
  s.wrong_option_index = wrong_option_index;
  s.max_tutor_turns = max_tutor_turns;
  s.started_at = now;
  s.history.push_back(Turn{0, Speaker::student, question.options[static_cast<std::size_t>(wrong_option_index)], now, {}});
  return s;
}

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n\f\v");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n\f\v");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string capped_reply(const std::string& raw, int cap) {
  auto text = llm::truncate_sentences(trim(raw), cap);
  if (text.empty()) throw BackendError("backend returned an empty completion");
  return text;
}

inline void append_turn(SessionState& s, Speaker who, std::string text, Instant now) {
  s.history.push_back(Turn{static_cast<int>(s.history.size()), who, std::move(text), now, {}});
}

}  // namespace detail

/// Generates, caps and appends the next tutor turn, then re-evaluates
/// termination. Leaves `state` untouched if the backend throws.
inline std::string tutor_step(SessionState& state, llm::ChatBackend& backend, const llm::GenerationParams& params,
                              Instant now = now_ms()) {
  auto msgs = build_tutor_messages(state);
  auto utterance = detail::capped_reply(backend.complete(msgs, params), kTutorSentenceCap);
  detail::append_turn(state, Speaker::tutor, utterance, now);
  ++state.tutor_turns;
  state.status = check_termination(state);
  if (state.closed()) state.ended_at = now;
  return utterance;
}

/// Synthetic-mode student turn, capped at one sentence.
inline std::string student_step(SessionState& state, llm::ChatBackend& backend, const llm::GenerationParams& params,
                                Instant now = now_ms()) {
  auto msgs = build_student_messages(state);
  auto utterance = detail::capped_reply(backend.complete(msgs, params), kStudentSentenceCap);
  detail::append_turn(state, Speaker::student, utterance, now);
  return utterance;
}

/// Interactive-mode student turn. Human text is stored verbatim.
inline void apply_student_message(SessionState& state, std::string text, Instant now = now_ms()) {
  if (state.closed()) throw ProtocolError("session closed");
  if (split_whitespace(text).empty()) throw ValidationError("student message must be non-empty");
  if (state.history.empty() || state.last_turn().speaker != Speaker::tutor) {
    throw ProtocolError("student message requires the last turn to be a tutor turn");
  }
  detail::append_turn(state, Speaker::student, std::move(text), now);
}

/// Runs a synthetic session to completion.
inline void run_synthetic(SessionState& state, llm::ChatBackend& tutor, llm::ChatBackend& student,
                          const llm::GenerationParams& tutor_params, const llm::GenerationParams& student_params) {
  tutor_step(state, tutor, tutor_params);
  while (!state.closed()) {
    student_step(state, student, student_params);
    tutor_step(state, tutor, tutor_params);
  }
}

// ---------------------------------------------------------------------------
// Records

inline DialogRecord freeze(const SessionState& state, std::string dialog_id, std::string arm, std::string model_name) {
  if (!state.closed()) throw ProtocolError("cannot freeze an active session");
  return DialogRecord{std::move(dialog_id), state,
                      state.status == SessionStatus::success ? Outcome::success : Outcome::turn_limit,
                      std::move(arm), std::move(model_name)};
}

/// Structural invariants of a session: dense indices, student opening,
/// strict alternation, tutor-turn count and cap, consistent status.
/// Returns a description of the first violation.
inline std::optional<std::string> find_violation(const SessionState& s) {
  if (s.history.empty()) return "history is empty";
  if (s.history.front().speaker != Speaker::student) return "first turn must be a student turn";
  int tutors = 0;
  for (std::size_t i = 0; i < s.history.size(); ++i) {
    const auto& t = s.history[i];
    if (t.index != static_cast<int>(i)) return "turn indices must be dense and increasing";
    if (split_whitespace(t.text).empty()) return "turn " + std::to_string(i) + " has empty text";
    auto expected = i % 2 == 0 ? Speaker::student : Speaker::tutor;
    if (t.speaker != expected) return "speakers must alternate (turn " + std::to_string(i) + ")";
    if (t.speaker == Speaker::tutor) ++tutors;
  }
  if (tutors != s.tutor_turns) return "tutor_turns does not match history";
  if (s.tutor_turns > s.max_tutor_turns) return "tutor turn cap exceeded";
  if (s.closed()) {
    if (!s.ended_at) return "closed session without ended_at";
    if (s.last_turn().speaker != Speaker::tutor) return "closed session must end on a tutor turn";
  } else if (s.ended_at) {
    return "active session has ended_at";
  }
  if (s.wrong_option_index == s.grounding.correct_index) return "opening choice is the correct answer";
  return std::nullopt;
}

/// Re-evaluates termination after every tutor turn of a recorded dialog.
/// Returns the status the state machine would have reached, or nullopt if
/// it would have stopped before the recorded end.
inline std::optional<SessionStatus> replay_status(const SessionState& recorded) {
  SessionState probe = recorded;
  probe.history.clear();
  probe.tutor_turns = 0;
  probe.status = SessionStatus::active;
  for (std::size_t i = 0; i < recorded.history.size(); ++i) {
    if (probe.status != SessionStatus::active) return std::nullopt;
    probe.history.push_back(recorded.history[i]);
    if (recorded.history[i].speaker == Speaker::tutor) {
      ++probe.tutor_turns;
      probe.status = check_termination(probe);
    }
  }
  return probe.status;
}

}  // namespace tutorgen::dialog
