#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "helpers.hpp"
#include "tutorgen/study_http.hpp"

using namespace tutorgen;
using namespace tutorgen::study;
using testing_support::fixture;
using testing_support::fixture_corpus;
using testing_support::LocalServer;
using testing_support::TempDir;
using nlohmann::json;

namespace {

const std::string kSuccessReply = "Yes, exactly! You can now close this tab and continue.";

/// Manually advanced clock shared with the service.
struct ManualClock {
  std::shared_ptr<std::atomic<std::int64_t>> ms = std::make_shared<std::atomic<std::int64_t>>(1'700'000'000'000);
  StudyService::Clock fn() const {
    return [ms = ms] { return Instant{std::chrono::milliseconds{ms->load()}}; };
  }
  void advance(std::int64_t delta) { *ms += delta; }
};

StudyConfig scripted_config(std::vector<std::string> a, std::vector<std::string> b, std::string store = ":memory:") {
  StudyConfig c;
  c.corpus_path = fixture("corpus.json");
  c.store_path = std::move(store);
  c.arms["A"] = llm::BackendConfig::scripted(std::move(a), "tuned");
  c.arms["B"] = llm::BackendConfig::scripted(std::move(b), "base");
  return c;
}

StudyConfig two_step_config(std::string store = ":memory:") {
  return scripted_config({"What does the passage say?", kSuccessReply}, {"Look again.", kSuccessReply},
                         std::move(store));
}

}  // namespace

// ---------------------------------------------------------------------------
// Service

TEST(StudyConfig, FromJsonResolvesPaths) {
  auto j = json::parse(R"({
    "corpus": "corpus.json", "store": ":memory:", "max_tutor_turns": 4,
    "arms": {"A": {"kind": "scripted", "script": ["x"]}, "B": {"kind": "scripted", "script": ["y"]}},
    "tutor_params": {"temperature": 0.2, "max_tokens": 64}, "static_dir": "web"})");
  auto c = StudyConfig::from_json(j, "/data");
  EXPECT_EQ(c.corpus_path, std::filesystem::path("/data/corpus.json"));
  EXPECT_EQ(c.store_path, ":memory:");
  EXPECT_EQ(c.max_tutor_turns, 4);
  EXPECT_EQ(c.tutor_params.temperature, 0.2);
  EXPECT_EQ(c.static_dir, std::filesystem::path("/data/web"));
  j["arms"].erase("B");
  EXPECT_THROW(StudyConfig::from_json(j, "/data"), ValidationError);
}

TEST(StudyService, ArmsAlternatePerWorksheet) {
  StudyService svc(two_step_config(), fixture_corpus());
  EXPECT_EQ(svc.create_session("p1", "ws-jenny").arm, "A");
  EXPECT_EQ(svc.create_session("p2", "ws-jenny").arm, "B");
  EXPECT_EQ(svc.create_session("p1", "ws-della").arm, "A");
  EXPECT_EQ(svc.create_session("p3", "ws-jenny").arm, "A");
}

TEST(StudyService, TwelveSessionsSplitEvenly) {
  StudyService svc(two_step_config(), fixture_corpus());
  std::map<std::string, int> counts;
  for (int i = 0; i < 12; ++i) ++counts[svc.create_session("p" + std::to_string(i), "ws-traveler").arm];
  EXPECT_EQ(counts["A"], 6);
  EXPECT_EQ(counts["B"], 6);
}

TEST(StudyService, SessionErrors) {
  StudyService svc(two_step_config(), fixture_corpus());
  EXPECT_THROW(svc.create_session("p", "ws-missing"), NotFoundError);
  auto s = svc.create_session("p", "ws-01");
  EXPECT_THROW(svc.create_session("p", "ws-01"), ConflictError);
  EXPECT_THROW(svc.get_session("nope"), NotFoundError);
  EXPECT_EQ(svc.get_session(s.session_id).questions.size(), 3u);
  EXPECT_EQ(svc.get_session(s.session_id).questions.at("q1"), QuestionState::unanswered);
}

TEST(StudyService, CorrectAnswerOpensNoDialog) {
  StudyService svc(two_step_config(), fixture_corpus());
  auto s = svc.create_session("p", "ws-jenny");
  auto r = svc.submit_answer(s.session_id, "q1", 2);
  EXPECT_TRUE(r.correct);
  EXPECT_FALSE(r.dialog_id);
  EXPECT_EQ(svc.get_session(s.session_id).questions.at("q1"), QuestionState::correct);
  EXPECT_THROW(svc.submit_answer(s.session_id, "q1", 0), ConflictError);
}

TEST(StudyService, WrongAnswerDialogRunsToSuccess) {
  ManualClock clock;
  StudyService svc(two_step_config(), fixture_corpus(), clock.fn());
  auto s = svc.create_session("p", "ws-jenny");
  const auto& q = corpus::find_worksheet(fixture_corpus(), "ws-jenny")->questions.front();

  auto r = svc.submit_answer(s.session_id, "q1", 0);
  EXPECT_FALSE(r.correct);
  ASSERT_TRUE(r.dialog_id);
  EXPECT_EQ(r.tutor_reply, "What does the passage say?");
  EXPECT_EQ(r.status, SessionStatus::active);
  auto state = svc.dialog_state(*r.dialog_id);
  ASSERT_EQ(state.history.size(), 2u);
  EXPECT_EQ(state.history[0].text, q.options[0]);
  EXPECT_FALSE(state.profile);
  EXPECT_EQ(svc.get_session(s.session_id).questions.at("q1"), QuestionState::in_dialog);
  EXPECT_THROW(svc.submit_answer(s.session_id, "q1", 1), ConflictError);

  clock.advance(98'870);
  auto m = svc.post_message(*r.dialog_id, "Is it because she wanted to go?");
  EXPECT_EQ(m.status, SessionStatus::success);
  EXPECT_EQ(m.tutor_reply, kSuccessReply);
  EXPECT_EQ(svc.get_session(s.session_id).questions.at("q1"), QuestionState::resolved);
  EXPECT_THROW(svc.post_message(*r.dialog_id, "hello?"), ConflictError);

  auto timings = svc.timings();
  ASSERT_EQ(timings.size(), 1u);
  EXPECT_DOUBLE_EQ(timings[0].duration_seconds, 98.87);
  EXPECT_EQ(timings[0].arm, "A");
}

TEST(StudyService, InvalidAnswers) {
  StudyService svc(two_step_config(), fixture_corpus());
  auto s = svc.create_session("p", "ws-jenny");
  EXPECT_THROW(svc.submit_answer(s.session_id, "q1", 4), ValidationError);
  EXPECT_THROW(svc.submit_answer(s.session_id, "q1", -1), ValidationError);
  EXPECT_THROW(svc.submit_answer(s.session_id, "q9", 0), NotFoundError);
  EXPECT_THROW(svc.submit_answer("missing", "q1", 0), NotFoundError);
  EXPECT_THROW(svc.post_message("missing", "hi"), NotFoundError);
}

TEST(StudyService, TurnLimitClosesDialog) {
  std::vector<std::string> hints(10, "Try again.");
  auto cfg = scripted_config(hints, hints);
  StudyService svc(cfg, fixture_corpus());
  auto s = svc.create_session("p", "ws-della");
  auto r = svc.submit_answer(s.session_id, "q1", 0);
  SessionStatus status = *r.status;
  int posted = 0;
  while (status == SessionStatus::active) {
    status = svc.post_message(*r.dialog_id, "Maybe this one?").status;
    ++posted;
  }
  EXPECT_EQ(status, SessionStatus::turn_limit);
  EXPECT_EQ(posted, 9);
  EXPECT_EQ(svc.dialog_state(*r.dialog_id).tutor_turns, 10);
  EXPECT_EQ(svc.get_session(s.session_id).questions.at("q1"), QuestionState::resolved);
}

TEST(StudyService, BackendFailureLeavesDialogActive) {
  auto cfg = scripted_config({"Only one hint."}, {"Only one hint."});
  StudyService svc(cfg, fixture_corpus());
  auto s = svc.create_session("p", "ws-jenny");
  auto r = svc.submit_answer(s.session_id, "q1", 1);
  auto before = svc.dialog_state(*r.dialog_id);
  EXPECT_THROW(svc.post_message(*r.dialog_id, "Help?"), BackendError);
  auto after = svc.dialog_state(*r.dialog_id);
  EXPECT_EQ(after, before);
  EXPECT_EQ(after.status, SessionStatus::active);
}

TEST(StudyService, ScriptResumesAfterRestart) {
  TempDir dir;
  auto store = (dir / "study.db").string();
  std::string dialog_id, session_id;
  {
    StudyService svc(two_step_config(store), fixture_corpus());
    session_id = svc.create_session("p", "ws-jenny").session_id;
    dialog_id = *svc.submit_answer(session_id, "q1", 0).dialog_id;
  }
  StudyService svc(two_step_config(store), fixture_corpus());
  EXPECT_EQ(svc.post_message(dialog_id, "Because of the ice cream?").tutor_reply, kSuccessReply);
  EXPECT_EQ(svc.get_session(session_id).questions.at("q1"), QuestionState::resolved);
  EXPECT_EQ(svc.create_session("p2", "ws-jenny").arm, "B");
}

TEST(StudyService, HelpfulnessRules) {
  StudyService svc(two_step_config(), fixture_corpus());
  auto s = svc.create_session("p", "ws-jenny");
  EXPECT_THROW(svc.submit_helpfulness(s.session_id, 3), ValidationError);
  EXPECT_THROW(svc.submit_helpfulness(s.session_id, 2), ConflictError);
  auto r = svc.submit_answer(s.session_id, "q1", 0);
  svc.post_message(*r.dialog_id, "Oh, I see.");
  svc.submit_helpfulness(s.session_id, 2);
  EXPECT_THROW(svc.submit_helpfulness(s.session_id, 1), ConflictError);
  EXPECT_NO_THROW(svc.create_session("p", "ws-jenny"));
}

TEST(StudyService, RatingsOverwriteAndRequireClosedDialog) {
  StudyService svc(two_step_config(), fixture_corpus());
  auto s = svc.create_session("p", "ws-jenny");
  auto r = svc.submit_answer(s.session_id, "q1", 0);
  EXPECT_THROW(svc.submit_dialog_rating(*r.dialog_id, "r1", {1, 1, 1, 1}), ConflictError);
  svc.post_message(*r.dialog_id, "ok");
  EXPECT_THROW(svc.submit_dialog_rating(*r.dialog_id, "r1", {1, 1, 3, 1}), ValidationError);
  EXPECT_THROW(svc.submit_dialog_rating("missing", "r1", {1, 1, 1, 1}), NotFoundError);
  EXPECT_FALSE(svc.submit_dialog_rating(*r.dialog_id, "r1", {1, 1, 1, 1}));
  EXPECT_TRUE(svc.submit_dialog_rating(*r.dialog_id, "r1", {2, 0, -1, 1}));
  EXPECT_FALSE(svc.submit_dialog_rating(*r.dialog_id, "r2", {0, 0, 0, 0}));
  auto ratings = svc.ratings();
  ASSERT_EQ(ratings.size(), 2u);
  EXPECT_EQ(ratings[0].scores, (std::array<int, 4>{2, 0, -1, 1}));
}

TEST(StudyService, EmptyExportHasHeaders) {
  StudyService svc(two_step_config(), fixture_corpus());
  auto files = svc.export_bundle();
  EXPECT_EQ(files.at("dataset.jsonl"), "");
  EXPECT_EQ(files.at("ratings.csv"), std::string(metrics::kRatingsHeader) + "\n");
  EXPECT_EQ(files.at("timings.csv"), std::string(kTimingsHeader) + "\n");
  EXPECT_EQ(files.at("helpfulness.csv"), std::string(kHelpfulnessHeader) + "\n");
  auto summary = json::parse(files.at("summary.json"));
  EXPECT_EQ(summary["arms"]["A"]["closed_dialogs"], 0);
  EXPECT_TRUE(summary["arms"]["B"]["mean_duration_seconds"].is_null());
}

TEST(StudyService, ExportOnlyClosedDialogsAndFeedsMetrics) {
  TempDir dir;
  StudyService svc(two_step_config(), fixture_corpus());
  auto s1 = svc.create_session("p1", "ws-jenny");
  auto s2 = svc.create_session("p2", "ws-jenny");
  auto closed = svc.submit_answer(s1.session_id, "q1", 0);
  svc.post_message(*closed.dialog_id, "I get it now.");
  svc.submit_answer(s2.session_id, "q1", 1);
  svc.submit_helpfulness(s1.session_id, 1);
  svc.submit_dialog_rating(*closed.dialog_id, "r1", {1, 2, 1, 0});
  svc.export_study(dir / "export");

  auto dataset = synthgen::read_dataset(dir / "export" / "dataset.jsonl");
  ASSERT_EQ(dataset.size(), 1u);
  EXPECT_EQ(dataset[0].dialog_id, *closed.dialog_id);
  EXPECT_EQ(dataset[0].arm, "A");
  EXPECT_EQ(dataset[0].model_name, "tuned");

  metrics::ReportInputs in;
  in.dataset = dataset;
  in.ratings = metrics::parse_ratings_csv(io::read_file(dir / "export" / "ratings.csv"));
  in.helpfulness = metrics::parse_helpfulness_csv(io::read_file(dir / "export" / "helpfulness.csv"));
  auto report = metrics::build_report(in);
  EXPECT_EQ(report.arms.at("A").helpfulness, 1.0);
  EXPECT_DOUBLE_EQ(report.arms.at("A").success_at[1], 1.0);
}

TEST(StudyService, ConcurrentSessionsKeepBalance) {
  TempDir dir;
  StudyService svc(two_step_config((dir / "s.db").string()), fixture_corpus());
  std::vector<std::thread> threads;
  std::atomic<int> a{0};
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&, i] {
      auto s = svc.create_session("p" + std::to_string(i), "ws-02");
      if (s.arm == "A") ++a;
      auto r = svc.submit_answer(s.session_id, "q1", 0);
      svc.post_message(*r.dialog_id, "ok");
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(a.load(), 4);
  EXPECT_EQ(svc.closed_dialogs().size(), 8u);
}

// ---------------------------------------------------------------------------
// HTTP

class StudyHttp : public ::testing::Test {
 protected:
  void SetUp() override {
    svc_ = std::make_unique<StudyService>(two_step_config(), fixture_corpus());
    install_routes(server_.server(), *svc_);
    server_.start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", server_.port());
  }

  httplib::Result post(const std::string& path, const json& body) {
    return client_->Post(path, body.dump(), "application/json");
  }

  std::unique_ptr<StudyService> svc_;
  LocalServer server_;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(StudyHttp, WorksheetsHideAnswerKey) {
  auto list = client_->Get("/api/worksheets");
  ASSERT_TRUE(list);
  EXPECT_EQ(list->status, 200);
  auto j = json::parse(list->body);
  EXPECT_EQ(j["worksheets"].size(), 23u);
  EXPECT_FALSE(j["worksheets"][0].contains("passage_text"));

  auto one = client_->Get("/api/worksheets/ws-jenny");
  ASSERT_TRUE(one);
  EXPECT_EQ(one->status, 200);
  EXPECT_EQ(one->body.find("correct_index"), std::string::npos);
  EXPECT_EQ(json::parse(one->body)["questions"][0]["options"].size(), 4u);
  EXPECT_EQ(client_->Get("/api/worksheets/nope")->status, 404);
}

TEST_F(StudyHttp, FullSessionFlow) {
  auto created = post("/api/sessions", {{"participant_id", "p1"}, {"worksheet_id", "ws-jenny"}});
  ASSERT_TRUE(created);
  ASSERT_EQ(created->status, 201);
  auto sid = json::parse(created->body)["session_id"].get<std::string>();
  EXPECT_EQ(json::parse(created->body)["arm"], "A");
  EXPECT_EQ(post("/api/sessions", {{"participant_id", "p1"}, {"worksheet_id", "ws-jenny"}})->status, 409);

  auto answer = post("/api/sessions/" + sid + "/answers", {{"question_id", "q1"}, {"option_index", 0}});
  ASSERT_EQ(answer->status, 200);
  auto aj = json::parse(answer->body);
  EXPECT_EQ(aj["correct"], false);
  auto did = aj["dialog_id"].get<std::string>();
  EXPECT_EQ(aj["status"], "active");

  EXPECT_EQ(post("/api/sessions/" + sid + "/answers", {{"question_id", "q1"}, {"option_index", 1}})->status, 409);
  EXPECT_EQ(post("/api/dialogs/" + did + "/ratings",
                 {{"rater_id", "r"}, {"care", 1}, {"coherence", 1}, {"correctness", 1}, {"gmsl", 1}})
                ->status,
            409);

  auto msg = post("/api/dialogs/" + did + "/messages", {{"text", "Because it was hot?"}});
  ASSERT_EQ(msg->status, 200);
  EXPECT_EQ(json::parse(msg->body)["status"], "success");
  EXPECT_EQ(post("/api/dialogs/" + did + "/messages", {{"text", "again"}})->status, 409);

  auto dialog = client_->Get("/api/dialogs/" + did);
  EXPECT_EQ(json::parse(dialog->body)["turns"].size(), 4u);
  auto session = json::parse(client_->Get("/api/sessions/" + sid)->body);
  EXPECT_EQ(session["questions"]["q1"], "resolved");
  EXPECT_EQ(session["dialogs"]["q1"], did);

  EXPECT_EQ(post("/api/sessions/" + sid + "/helpfulness", {{"score", 3}})->status, 400);
  EXPECT_EQ(post("/api/sessions/" + sid + "/helpfulness", {{"score", 2}})->status, 201);
  EXPECT_EQ(post("/api/sessions/" + sid + "/helpfulness", {{"score", 2}})->status, 409);

  json rating{{"rater_id", "r"}, {"care", 1}, {"coherence", 1}, {"correctness", 1}, {"gmsl", 1}};
  EXPECT_EQ(post("/api/dialogs/" + did + "/ratings", rating)->status, 201);
  rating["care"] = 2;
  auto again = post("/api/dialogs/" + did + "/ratings", rating);
  EXPECT_EQ(again->status, 200);
  EXPECT_EQ(json::parse(again->body)["replaced"], true);
}

TEST_F(StudyHttp, BadRequests) {
  EXPECT_EQ(client_->Post("/api/sessions", "not json", "application/json")->status, 400);
  EXPECT_EQ(post("/api/sessions", {{"participant_id", "p"}})->status, 400);
  EXPECT_EQ(post("/api/sessions", {{"participant_id", 5}, {"worksheet_id", "ws-01"}})->status, 400);
  EXPECT_EQ(post("/api/sessions", {{"participant_id", "p"}, {"worksheet_id", "ws-zz"}})->status, 404);
  auto sid = json::parse(post("/api/sessions", {{"participant_id", "p"}, {"worksheet_id", "ws-01"}})->body)["session_id"]
                 .get<std::string>();
  auto bad = post("/api/sessions/" + sid + "/answers", {{"question_id", "q1"}, {"option_index", 7}});
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(json::parse(bad->body)["error"], "validation");
  EXPECT_EQ(client_->Get("/api/sessions/none")->status, 404);
  EXPECT_EQ(post("/api/dialogs/none/messages", {{"text", "hi"}})->status, 404);
}

TEST_F(StudyHttp, BackendFailureIs502AndDialogStaysActive) {
  server_.stop();
  svc_.reset();
  LocalServer server;
  StudyService svc(scripted_config({"hint"}, {"hint"}), fixture_corpus());
  install_routes(server.server(), svc);
  server.start();
  httplib::Client client("127.0.0.1", server.port());
  auto sid = json::parse(client.Post("/api/sessions", json{{"participant_id", "p"}, {"worksheet_id", "ws-jenny"}}.dump(),
                                     "application/json")
                             ->body)["session_id"]
                 .get<std::string>();
  auto did = json::parse(client.Post("/api/sessions/" + sid + "/answers",
                                     json{{"question_id", "q1"}, {"option_index", 0}}.dump(), "application/json")
                             ->body)["dialog_id"]
                 .get<std::string>();
  auto res = client.Post("/api/dialogs/" + did + "/messages", json{{"text", "hi"}}.dump(), "application/json");
  EXPECT_EQ(res->status, 502);
  EXPECT_EQ(json::parse(res->body)["error"], "backend");
  EXPECT_EQ(json::parse(client.Get("/api/dialogs/" + did)->body)["status"], "active");
}

TEST_F(StudyHttp, ExportRequiresAdminToken) {
  unsetenv(kAdminTokenEnv);
  EXPECT_EQ(client_->Get("/api/export")->status, 401);
  setenv(kAdminTokenEnv, "sekret", 1);
  EXPECT_EQ(client_->Get("/api/export")->status, 401);
  EXPECT_EQ(client_->Get("/api/export", {{"Authorization", "Bearer wrong"}})->status, 401);
  auto ok = client_->Get("/api/export", {{"Authorization", "Bearer sekret"}});
  ASSERT_EQ(ok->status, 200);
  auto files = json::parse(ok->body)["files"];
  EXPECT_TRUE(files.contains("dataset.jsonl"));
  EXPECT_TRUE(files.contains("summary.json"));
  EXPECT_EQ(client_->Get("/api/export", {{"X-Admin-Token", "sekret"}})->status, 200);
  unsetenv(kAdminTokenEnv);
}
