#include <gtest/gtest.h>

#include <random>

#include "helpers.hpp"
#include "tutorgen/dialog.hpp"

using namespace tutorgen;
using namespace tutorgen::dialog;
using testing_support::fixture_corpus;

namespace {

const corpus::Worksheet& jenny() { return *corpus::find_worksheet(fixture_corpus(), "ws-jenny"); }
const corpus::Question& jenny_q() { return jenny().questions.front(); }  // correct_index 2

SessionState jordan_session(int wrong = 0, int max_turns = kDefaultMaxTutorTurns) {
  return start_session(jenny(), jenny_q(), wrong, find_profile("Jordan"), now_ms(), max_turns);
}

const std::string kSuccess =
    "Exactly! That's the right answer. You can now close this tab and continue with the rest of your worksheet.";

}  // namespace

TEST(Profiles, FourVerbatimProfiles) {
  const auto& ps = builtin_profiles();
  ASSERT_EQ(ps.size(), 4u);
  EXPECT_EQ(ps[0].name, "Mia");
  EXPECT_EQ(ps[3].name, "Isabella");
  EXPECT_EQ(ps[0].system_prompt.rfind("You are Mia, a reflective learner", 0), 0u);
  EXPECT_NE(find_profile("jordan").system_prompt.find("You are Jordan, a curious explorer"), std::string::npos);
  EXPECT_NE(find_profile("ALEX").system_prompt.find("a quick thinker"), std::string::npos);
  EXPECT_THROW(find_profile("zed"), ValidationError);
}

TEST(StartSession, OpensWithVerbatimWrongOption) {
  auto s = jordan_session(0);
  ASSERT_EQ(s.history.size(), 1u);
  EXPECT_EQ(s.history[0].speaker, Speaker::student);
  EXPECT_EQ(s.history[0].text, "Jenny asked to go for ice cream.");
  EXPECT_EQ(s.status, SessionStatus::active);
  EXPECT_EQ(s.tutor_turns, 0);
  EXPECT_FALSE(find_violation(s));
}

TEST(StartSession, CorrectChoiceIsDomainError) {
  try {
    jordan_session(2);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_STREQ(e.what(), "initial choice must be incorrect");
  }
  EXPECT_THROW(jordan_session(4), ValidationError);
}

TEST(TutorMessages, StructureAndPrompt) {
  auto s = jordan_session();
  auto msgs = build_tutor_messages(s);
  ASSERT_EQ(msgs.size(), 2u);
  EXPECT_EQ(msgs[0].role, llm::Role::system);
  EXPECT_EQ(msgs[0].content.rfind(std::string(kTutorPrompt), 0), 0u);
  EXPECT_NE(msgs[0].content.find("Help them connect the dots without giving the answer directly"), std::string::npos);
  EXPECT_NE(msgs[0].content.find(jenny().passage_text), std::string::npos);
  EXPECT_NE(msgs[0].content.find("Correct answer: C) Jenny asked to go to the hardware store."), std::string::npos);
  EXPECT_EQ(msgs[1].role, llm::Role::user);

  llm::ScriptedBackend tutor({"Think about Science class."});
  llm::ScriptedBackend student({"Maybe the store?"});
  tutor_step(s, tutor, {});
  EXPECT_THROW(build_tutor_messages(s), ProtocolError);
  student_step(s, student, {});
  msgs = build_tutor_messages(s);
  ASSERT_EQ(msgs.size(), 4u);
  EXPECT_EQ(msgs[2].role, llm::Role::assistant);
  EXPECT_EQ(msgs[2].content, "Think about Science class.");
  EXPECT_EQ(msgs[3].content, "Maybe the store?");
}

TEST(StudentMessages, StructureAndNoDisclosure) {
  auto s = jordan_session();
  EXPECT_THROW(build_student_messages(s), ProtocolError);
  llm::ScriptedBackend tutor({"Think about Science class."});
  tutor_step(s, tutor, {});
  auto msgs = build_student_messages(s);
  ASSERT_EQ(msgs.size(), 2u);
  EXPECT_EQ(msgs[1].role, llm::Role::user);
  EXPECT_NE(msgs[0].content.find("You are Jordan, a curious explorer"), std::string::npos);
  EXPECT_NE(msgs[0].content.find("one sentence"), std::string::npos);
  for (const auto& m : msgs) {
    EXPECT_EQ(m.content.find("Correct answer"), std::string::npos);
    EXPECT_EQ(m.content.find("correct_index"), std::string::npos);
  }
  // the correct option appears exactly once, undistinguished among the four
  const auto& correct = jenny_q().correct_option();
  auto first = msgs[0].content.find(correct);
  ASSERT_NE(first, std::string::npos);
  EXPECT_EQ(msgs[0].content.find(correct, first + 1), std::string::npos);

  auto interactive = start_session(jenny(), jenny_q(), 0, std::nullopt);
  llm::ScriptedBackend tutor2({"Hint."});
  tutor_step(interactive, tutor2, {});
  EXPECT_THROW(build_student_messages(interactive), ProtocolError);
}

TEST(SuccessPhrase, Examples) {
  EXPECT_TRUE(detect_success_phrase(kSuccess));
  EXPECT_FALSE(detect_success_phrase("Great job connecting the dots!"));
  EXPECT_TRUE(detect_success_phrase("...you can close the tab now."));
  EXPECT_TRUE(detect_success_phrase("CLOSE THIS TAB"));
  EXPECT_FALSE(detect_success_phrase("close a tab"));
  EXPECT_FALSE(detect_success_phrase("close this  tab"));
}

TEST(TutorStep, CapsAtThreeSentences) {
  auto s = jordan_session();
  llm::ScriptedBackend b({"  One. Two! Three? Four. Five.  "});
  auto u = tutor_step(s, b, {});
  EXPECT_EQ(u, "One. Two! Three?");
  EXPECT_EQ(s.last_turn().text, u);
  EXPECT_EQ(s.tutor_turns, 1);
  EXPECT_EQ(s.status, SessionStatus::active);
}

TEST(TutorStep, SuccessPhraseClosesSession) {
  auto s = jordan_session();
  llm::ScriptedBackend b({kSuccess});
  auto at = parse_instant("2024-05-01T12:00:00.000Z");
  tutor_step(s, b, {}, at);
  EXPECT_EQ(s.status, SessionStatus::success);
  EXPECT_EQ(s.ended_at, at);
  EXPECT_THROW(build_tutor_messages(s), ProtocolError);
}

TEST(TutorStep, BackendFailureLeavesStateUnchanged) {
  auto s = jordan_session();
  auto before = s;
  llm::ScriptedBackend empty_reply({"   "});
  EXPECT_THROW(tutor_step(s, empty_reply, {}), BackendError);
  EXPECT_EQ(s, before);
  EXPECT_THROW(tutor_step(s, empty_reply, {}), BackendError);  // exhausted
  EXPECT_EQ(s, before);
}

TEST(StudentStep, OneSentenceCapAndAlternation) {
  auto s = jordan_session();
  llm::ScriptedBackend tutor({"Hint one.", "Hint two."});
  llm::ScriptedBackend student({"I think A. Because of X."});
  EXPECT_THROW(student_step(s, student, {}), ProtocolError);
  tutor_step(s, tutor, {});
  EXPECT_EQ(student_step(s, student, {}), "I think A.");
  EXPECT_THROW(student_step(s, student, {}), ProtocolError);
}

TEST(Termination, TenthTurnWithoutPhraseIsTurnLimit) {
  auto s = jordan_session();
  std::vector<std::string> hints(10, "Keep looking.");
  std::vector<std::string> answers(9, "Hmm.");
  llm::ScriptedBackend tutor(hints), student(answers);
  run_synthetic(s, tutor, student, {}, {});
  EXPECT_EQ(s.status, SessionStatus::turn_limit);
  EXPECT_EQ(s.tutor_turns, 10);
  EXPECT_EQ(s.history.size(), 20u);
  EXPECT_FALSE(find_violation(s));
}

TEST(Termination, SuccessTakesPrecedenceOnTenthTurn) {
  auto s = jordan_session();
  std::vector<std::string> hints(9, "Keep looking.");
  hints.push_back(kSuccess);
  llm::ScriptedBackend tutor(hints), student(std::vector<std::string>(9, "Hmm."));
  run_synthetic(s, tutor, student, {}, {});
  EXPECT_EQ(s.status, SessionStatus::success);
  EXPECT_EQ(s.tutor_turns, 10);
}

TEST(Termination, CheckTerminationExamples) {
  auto s = jordan_session();
  s.tutor_turns = 3;
  s.history.push_back(Turn{1, Speaker::tutor, "Keep going.", {}, {}});
  EXPECT_EQ(check_termination(s), SessionStatus::active);
  s.tutor_turns = 10;
  EXPECT_EQ(check_termination(s), SessionStatus::turn_limit);
  s.history.back().text = kSuccess;
  EXPECT_EQ(check_termination(s), SessionStatus::success);
}

TEST(Interactive, ApplyStudentMessage) {
  auto s = start_session(jenny(), jenny_q(), 1, std::nullopt);
  EXPECT_THROW(apply_student_message(s, "too early"), ProtocolError);
  llm::ScriptedBackend tutor({"Why that one?", kSuccess});
  tutor_step(s, tutor, {});
  EXPECT_THROW(apply_student_message(s, ""), ValidationError);
  EXPECT_THROW(apply_student_message(s, " \n "), ValidationError);
  apply_student_message(s, "i understand. really! truly.");
  EXPECT_EQ(s.last_turn().text, "i understand. really! truly.");  // verbatim, not truncated
  tutor_step(s, tutor, {});
  try {
    apply_student_message(s, "more");
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_STREQ(e.what(), "session closed");
  }
}

TEST(Determinism, IdenticalScriptsGiveIdenticalTranscripts) {
  auto run = [] {
    auto s = start_session(jenny(), jenny_q(), 0, find_profile("mia"), parse_instant("2024-01-01T00:00:00.000Z"));
    llm::ScriptedBackend tutor({"A. B. C. D.", "Hint.", kSuccess}), student({"Hm. Ok.", "Store?"});
    auto t = parse_instant("2024-01-01T00:00:00.000Z");
    tutor_step(s, tutor, {}, t);
    while (!s.closed()) {
      student_step(s, student, {}, t);
      tutor_step(s, tutor, {}, t);
    }
    return s;
  };
  EXPECT_EQ(run(), run());
}

TEST(Replay, ReproducesRecordedStatus) {
  auto s = jordan_session();
  llm::ScriptedBackend tutor({"Hint.", kSuccess}), student({"Store?"});
  run_synthetic(s, tutor, student, {}, {});
  EXPECT_EQ(replay_status(s), SessionStatus::success);
  // A record that kept going after success is rejected.
  auto bad = s;
  bad.history.push_back(Turn{4, Speaker::student, "extra", {}, {}});
  bad.history.push_back(Turn{5, Speaker::tutor, "extra", {}, {}});
  EXPECT_FALSE(replay_status(bad));
}

TEST(Freeze, RequiresClosedSession) {
  auto s = jordan_session();
  EXPECT_THROW(freeze(s, "d", "arm", "m"), ProtocolError);
  llm::ScriptedBackend tutor({kSuccess});
  tutor_step(s, tutor, {});
  auto r = freeze(s, "d1", "synthetic", "m");
  EXPECT_EQ(r.outcome, Outcome::success);
  EXPECT_EQ(r.session.grounding.correct_index, 2);
}
