#pragma once

// The three published sample dialogs, transcribed verbatim with their
// printed annotations. Speaker prefixes are not part of the stored text,
// except the duplicated "Tutor: " inside the last water-cycle turn, which
// was part of the generated message.

#include <optional>
#include <string>
#include <vector>

#include "tutorgen/corpus.hpp"
#include "tutorgen/dialog.hpp"
#include "tutorgen/record.hpp"

namespace appendix {

struct PrintedTurn {
  tutorgen::Speaker speaker;
  std::string text;
  tutorgen::AnnotationSet printed;
};

struct PrintedDialog {
  std::string worksheet_id;
  std::string profile;
  int wrong_option;
  std::vector<PrintedTurn> turns;
};

inline tutorgen::AnnotationSet student(int talktime, int stm, std::optional<int> reasoning = std::nullopt) {
  tutorgen::AnnotationSet a;
  a.talktime = talktime;
  a.stm = stm;
  a.reasoning = reasoning;
  return a;
}

inline tutorgen::AnnotationSet tutor(int talktime, int focusing, int uptake, int ttm) {
  tutorgen::AnnotationSet a;
  a.talktime = talktime;
  a.focusing = focusing;
  a.uptake = uptake;
  a.ttm = ttm;
  return a;
}

inline std::vector<PrintedDialog> dialogs() {
  using tutorgen::Speaker;
  return {
      {"ws-jenny",
       "jordan",
       0,
       {{Speaker::student, "Jenny asked to go for ice cream.", student(7, 3)},
        {Speaker::tutor,
         "Good try, Jordan! But let's think about what Jenny was doing during school. She was trying to figure out "
         "what to get her dad for Christmas. Do you remember anything she realized in Science class? It might help "
         "us guess where they went after school.",
         tutor(45, 1, 1, 1)},
        {Speaker::student,
         "Jenny probably asked to go to the hardware store, since she had the idea to buy garden clippers for her dad "
         "during Science class!",
         student(24, 0, 0)},
        {Speaker::tutor,
         "Exactly! That's right, Jordan! You're thinking deeply and connecting the dots. Now you can close this tab "
         "and continue with your worksheet. Great job!",
         tutor(24, 0, 0, 0)}}},
      {"ws-traveler",
       "isabella",
       2,
       {{Speaker::student, "The villager felt sorry for the traveler.", student(7, 0)},
        {Speaker::tutor,
         "Let's think more about this, Isabella. Why would the villager feel sorry for the traveler? Did the text "
         "mention that the traveler seemed sad or upset?",
         tutor(26, 1, 1, 1)},
        {Speaker::student,
         "Based on the information provided, it doesn't seem like the villager felt sorry for the traveler, as there "
         "is no indication in the text that the traveler was sad or upset.",
         student(31, 0, 0)},
        {Speaker::tutor,
         "Exactly! That's right, Jordan! You're thinking deeply and connecting the dots. Now you can close this tab "
         "and continue with your worksheet. Great job!",
         tutor(24, 0, 0, 0)}}},
      {"ws-water-cycle",
       "jordan",
       0,
       {{Speaker::student, "…heat is added to water…", student(5, 3)},
        {Speaker::tutor,
         "That's correct! Jordan, you've found a good clue. When heat is added to water, something happens. Can you "
         "tell me what that might be? Remember, it has something to do with the form of water changing. Think about "
         "whether water is becoming more solid or less solid when heat is added.",
         tutor(51, 0, 1, 1)},
        {Speaker::student,
         "Hmm, when heat is added to water, I think it becomes less solid because heat makes things expand and get "
         "bigger? So maybe it's turning into gas or water vapor.",
         student(30, 4, 1)},
        {Speaker::tutor,
         "Exactly, Jordan! You're on the right track. When heat is added to water, it becomes less solid and changes "
         "form. Now, let's think about the options again - A, B, or C. Which one do you think fits best with water "
         "becoming less solid when heat is added?",
         tutor(48, 0, 1, 1)},
        {Speaker::student,
         "I believe option C, \"turning from liquid into gas,\" is the correct answer since heat makes water less "
         "solid and transforms it into a gas or water vapor.",
         student(28, 3, 1)},
        {Speaker::tutor,
         "Tutor: Yes, exactly! When heat is added to water, it evaporates and turns from liquid into gas. Great job "
         "connecting the dots, Jordan. You can now close this tab and continue with the rest of your worksheet.",
         tutor(37, 0, 1, 0)}}},
  };
}

/// Rebuilds a closed DialogRecord with the given turns (annotations dropped).
inline tutorgen::DialogRecord to_record(const PrintedDialog& d, const std::vector<tutorgen::corpus::Worksheet>& corpus,
                                        const std::string& dialog_id) {
  using namespace tutorgen;
  const auto* w = corpus::find_worksheet(corpus, d.worksheet_id);
  const auto& q = w->questions.front();
  SessionState s;
  s.worksheet_id = w->id;
  s.question_id = q.id;
  s.grounding = Grounding::from(*w, q);
  s.profile = dialog::find_profile(d.profile);
  s.wrong_option_index = d.wrong_option;
  s.started_at = parse_instant("2024-03-01T10:00:00.000Z");
  int i = 0;
  for (const auto& t : d.turns) {
    s.history.push_back(Turn{i, t.speaker, t.text, s.started_at + std::chrono::seconds(10 * i), std::nullopt});
    if (t.speaker == Speaker::tutor) ++s.tutor_turns;
    ++i;
  }
  s.status = SessionStatus::success;
  s.ended_at = s.history.back().timestamp;
  DialogRecord r;
  r.dialog_id = dialog_id;
  r.session = std::move(s);
  r.outcome = Outcome::success;
  r.arm = "synthetic";
  r.model_name = "fixture";
  return r;
}

}  // namespace appendix
