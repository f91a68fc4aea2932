// Runs one synthetic tutoring dialog with scripted backends and prints the
// record as a JSONL line plus its talktime annotations.
//
//   quickstart <corpus.json> [worksheet_id]

#include <iostream>

#include "tutorgen/tutorgen.hpp"

namespace tg = tutorgen;

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: quickstart <corpus.json> [worksheet_id]\n";
    return 2;
  }
  try {
    auto corpus = tg::corpus::load_worksheets(argv[1]);
    const auto* w = argc > 2 ? tg::corpus::find_worksheet(corpus, argv[2]) : &corpus.front();
    if (w == nullptr) {
      std::cerr << "no such worksheet\n";
      return 2;
    }
    const auto& q = w->questions.front();
    int wrong = (q.correct_index + 1) % 4;

    tg::llm::ScriptedBackend tutor({"What does the passage tell you?", "Yes, exactly! You can now close this tab."});
    tg::llm::ScriptedBackend student({"I think it says something else."});

    auto state = tg::dialog::start_session(*w, q, wrong, tg::dialog::find_profile("jordan"));
    tg::dialog::run_synthetic(state, tutor, student, tg::llm::GenerationParams::tutor_defaults(),
                              tg::llm::GenerationParams::student_defaults());
    auto record = tg::dialog::freeze(state, "quickstart-1", "synthetic", tutor.model_name());
    record = tg::annotate::annotate_dialog(record).record;

    std::cout << tg::synthgen::serialize_dataset({record});
    for (const auto& t : record.session.history) {
      std::cout << tg::to_string(t.speaker) << " (" << t.annotations->talktime << " words): " << t.text << "\n";
    }
  } catch (const tg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
