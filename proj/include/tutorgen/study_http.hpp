#pragma once

// JSON-over-HTTP front end for StudyService.

#include <cstdlib>
#include <functional>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tutorgen/error.hpp"
#include "tutorgen/study.hpp"

namespace tutorgen::study {

inline constexpr const char* kAdminTokenEnv = "STUDY_ADMIN_TOKEN";

inline int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::format:
    case ErrorKind::validation:
    case ErrorKind::domain: return 400;
    case ErrorKind::not_found: return 404;
    case ErrorKind::protocol:
    case ErrorKind::conflict: return 409;
    case ErrorKind::unauthorized: return 401;
    case ErrorKind::backend: return 502;
    case ErrorKind::timeout: return 504;
    case ErrorKind::io: return 500;
  }
  return 500;
}

/// Worksheet as shown to participants: no answer key.
inline ordered_json public_worksheet(const corpus::Worksheet& w, bool with_passage = true) {
  ordered_json j{{"id", w.id}, {"title", w.title}, {"grade_level", w.grade_level}, {"fiction", w.fiction}};
  if (!with_passage) {
    j["question_count"] = w.questions.size();
    return j;
  }
  j["passage_text"] = w.passage_text;
  auto qs = ordered_json::array();
  for (const auto& q : w.questions) {
    qs.push_back(ordered_json{{"id", q.id}, {"stem", q.stem}, {"options", q.options}, {"qtype", q.qtype}});
  }
  j["questions"] = std::move(qs);
  return j;
}

inline ordered_json to_json(const StudySession& s) {
  ordered_json qs = ordered_json::object();
  for (const auto& [qid, state] : s.questions) qs[qid] = to_string(state);
  ordered_json dialogs = ordered_json::object();
  for (const auto& [qid, did] : s.dialogs) dialogs[qid] = did;
  return ordered_json{{"session_id", s.session_id},     {"participant_id", s.participant_id},
                      {"worksheet_id", s.worksheet_id}, {"arm", s.arm},
                      {"created_at", format_instant(s.created_at)},
                      {"questions", qs},                {"dialogs", dialogs}};
}

namespace detail {

inline nlohmann::json parse_body(const httplib::Request& req) {
  auto j = nlohmann::json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ValidationError("request body must be a JSON object");
  return j;
}

template <class T>
T require(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

inline void send_json(httplib::Response& res, const ordered_json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, std::string_view kind, std::string_view message) {
  send_json(res, ordered_json{{"error", kind}, {"message", message}}, status);
}

inline std::string bearer_token(const httplib::Request& req) {
  if (req.has_header("X-Admin-Token")) return req.get_header_value("X-Admin-Token");
  auto auth = req.get_header_value("Authorization");
  constexpr std::string_view kPrefix = "Bearer ";
  if (auth.size() > kPrefix.size() && auth.compare(0, kPrefix.size(), kPrefix) == 0) return auth.substr(kPrefix.size());
  return {};
}

}  // namespace detail

/// Registers the API on `server`. The service must outlive it.
inline void install_routes(httplib::Server& server, StudyService& svc) {
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;
  auto guarded = [](Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const Error& e) {
        detail::send_error(res, http_status(e.kind()), to_string(e.kind()), e.what());
      } catch (const std::exception& e) {
        detail::send_error(res, 500, "internal", e.what());
      }
    };
  };

  server.Get("/api/worksheets", guarded([&svc](const auto&, auto& res) {
               auto arr = ordered_json::array();
               for (const auto& w : svc.worksheets()) arr.push_back(public_worksheet(w, false));
               detail::send_json(res, ordered_json{{"worksheets", arr}});
             }));

  server.Get("/api/worksheets/:id", guarded([&svc](const auto& req, auto& res) {
               const auto& id = req.path_params.at("id");
               const auto* w = corpus::find_worksheet(svc.worksheets(), id);
               if (w == nullptr) throw NotFoundError("unknown worksheet '" + id + "'");
               detail::send_json(res, public_worksheet(*w));
             }));

  server.Post("/api/sessions", guarded([&svc](const auto& req, auto& res) {
                auto body = detail::parse_body(req);
                auto s = svc.create_session(detail::require<std::string>(body, "participant_id"),
                                            detail::require<std::string>(body, "worksheet_id"));
                detail::send_json(res, to_json(s), 201);
              }));

  server.Get("/api/sessions/:id", guarded([&svc](const auto& req, auto& res) {
               detail::send_json(res, to_json(svc.get_session(req.path_params.at("id"))));
             }));

  server.Post("/api/sessions/:id/answers", guarded([&svc](const auto& req, auto& res) {
                auto body = detail::parse_body(req);
                auto r = svc.submit_answer(req.path_params.at("id"), detail::require<std::string>(body, "question_id"),
                                           detail::require<int>(body, "option_index"));
                ordered_json j{{"correct", r.correct}, {"dialog_id", nullptr}};
                if (r.dialog_id) {
                  j["dialog_id"] = *r.dialog_id;
                  j["tutor_reply"] = *r.tutor_reply;
                  j["status"] = to_string(*r.status);
                }
                detail::send_json(res, j);
              }));

  server.Get("/api/dialogs/:id", guarded([&svc](const auto& req, auto& res) {
               detail::send_json(res, to_json(svc.dialog_state(req.path_params.at("id"))));
             }));

  server.Post("/api/dialogs/:id/messages", guarded([&svc](const auto& req, auto& res) {
                auto body = detail::parse_body(req);
                auto r = svc.post_message(req.path_params.at("id"), detail::require<std::string>(body, "text"));
                detail::send_json(res, ordered_json{{"tutor_reply", r.tutor_reply}, {"status", to_string(r.status)}});
              }));

  server.Post("/api/sessions/:id/helpfulness", guarded([&svc](const auto& req, auto& res) {
                auto body = detail::parse_body(req);
                svc.submit_helpfulness(req.path_params.at("id"), detail::require<int>(body, "score"));
                detail::send_json(res, ordered_json{{"ok", true}}, 201);
              }));

  server.Post("/api/dialogs/:id/ratings", guarded([&svc](const auto& req, auto& res) {
                auto body = detail::parse_body(req);
                std::array<int, 4> scores{};
                for (std::size_t i = 0; i < scores.size(); ++i) {
                  scores[i] = detail::require<int>(body, metrics::kDimensionNames[i]);
                }
                bool replaced = svc.submit_dialog_rating(req.path_params.at("id"),
                                                         detail::require<std::string>(body, "rater_id"), scores);
                detail::send_json(res, ordered_json{{"ok", true}, {"replaced", replaced}}, replaced ? 200 : 201);
              }));

  server.Get("/api/export", guarded([&svc](const auto& req, auto& res) {
               const char* expected = std::getenv(kAdminTokenEnv);
               if (expected == nullptr || *expected == '\0') throw UnauthorizedError("export is disabled");
               if (detail::bearer_token(req) != expected) throw UnauthorizedError("bad admin token");
               ordered_json files = ordered_json::object();
               for (const auto& [name, contents] : svc.export_bundle()) files[name] = contents;
               detail::send_json(res, ordered_json{{"files", files}});
             }));

  if (svc.config().static_dir) server.set_mount_point("/", svc.config().static_dir->string());
}

/// Blocks until the server is stopped.
inline void serve(StudyService& svc, const std::string& host, int port) {
  httplib::Server server;
  install_routes(server, svc);
  if (!server.listen(host, port)) throw IoError("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace tutorgen::study
