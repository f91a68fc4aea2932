#pragma once

// Per-turn annotation and dataset statistics. Talktime is computed locally;
// uptake, focusing, talk-move and reasoning labels come from external
// classifier services reached through ClassifierClient.

#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tutorgen/error.hpp"
#include "tutorgen/io.hpp"
#include "tutorgen/llm.hpp"
#include "tutorgen/record.hpp"
#include "tutorgen/text.hpp"

namespace tutorgen::annotate {

inline int talktime(std::string_view utterance) { return static_cast<int>(word_count(utterance)); }

enum class LabelKind { uptake, focusing, ttm, stm, reasoning };

inline constexpr std::array kAllLabelKinds{LabelKind::uptake, LabelKind::focusing, LabelKind::ttm, LabelKind::stm,
                                           LabelKind::reasoning};

inline std::string_view to_string(LabelKind k) {
  switch (k) {
    case LabelKind::uptake: return "uptake";
    case LabelKind::focusing: return "focusing";
    case LabelKind::ttm: return "ttm";
    case LabelKind::stm: return "stm";
    case LabelKind::reasoning: return "reasoning";
  }
  return "uptake";
}

inline LabelKind label_kind_from_string(std::string_view s) {
  for (auto k : kAllLabelKinds) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("unknown label kind '" + std::string(s) + "'");
}

inline Speaker labeled_speaker(LabelKind k) {
  return (k == LabelKind::stm || k == LabelKind::reasoning) ? Speaker::student : Speaker::tutor;
}

inline int max_label(LabelKind k) { return k == LabelKind::stm ? 4 : 1; }

inline std::optional<int>& slot(AnnotationSet& a, LabelKind k) {
  switch (k) {
    case LabelKind::uptake: return a.uptake;
    case LabelKind::focusing: return a.focusing;
    case LabelKind::ttm: return a.ttm;
    case LabelKind::stm: return a.stm;
    case LabelKind::reasoning: return a.reasoning;
  }
  return a.uptake;
}

inline const std::optional<int>& slot(const AnnotationSet& a, LabelKind k) {
  return slot(const_cast<AnnotationSet&>(a), k);
}

// ---------------------------------------------------------------------------
// Classifier clients

/// Labels `texts` for one label kind. `context[i]` is the utterance that
/// preceded `texts[i]` (empty for the first turn). A nullopt entry means the
/// service declined to label that text.
class ClassifierClient {
 public:
  virtual ~ClassifierClient() = default;
  virtual bool supports(LabelKind kind) const = 0;
  virtual std::vector<std::optional<int>> classify(LabelKind kind, const std::vector<std::string>& texts,
                                                   const std::vector<std::string>& context) = 0;
  virtual std::size_t batch_size() const { return 32; }
};

/// Deterministic in-process classifier used by tests and dry runs.
class StubClassifier final : public ClassifierClient {
 public:
  using Rule = std::function<std::optional<int>(const std::string& text, const std::string& context)>;

  StubClassifier& set(LabelKind kind, Rule rule) {
    rules_[kind] = std::move(rule);
    return *this;
  }

  StubClassifier& constant(LabelKind kind, int value) {
    return set(kind, [value](const std::string&, const std::string&) { return std::optional<int>(value); });
  }

  /// Replays labels keyed by exact utterance text.
  StubClassifier& lookup(LabelKind kind, std::map<std::string, int> table) {
    return set(kind, [t = std::move(table)](const std::string& text, const std::string&) -> std::optional<int> {
      auto it = t.find(text);
      if (it == t.end()) return std::nullopt;
      return it->second;
    });
  }

  bool supports(LabelKind kind) const override { return rules_.count(kind) != 0; }

  std::vector<std::optional<int>> classify(LabelKind kind, const std::vector<std::string>& texts,
                                           const std::vector<std::string>& context) override {
    const auto& rule = rules_.at(kind);
    std::vector<std::optional<int>> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) out.push_back(rule(texts[i], context[i]));
    return out;
  }

 private:
  std::map<LabelKind, Rule> rules_;
};

struct ClassifierClientConfig {
  std::map<LabelKind, std::string> endpoints;
  std::chrono::seconds timeout{30};
  std::size_t batch_size = 32;

  void validate() const {
    if (batch_size < 1) throw ValidationError("classifier batch_size must be >= 1");
  }

  /// `{"endpoints": {"uptake": url, ...}, "timeout_seconds": n, "batch_size": n}`
  static ClassifierClientConfig from_json(const nlohmann::json& j) {
    ClassifierClientConfig c;
    try {
      for (const auto& [key, url] : j.at("endpoints").items()) {
        c.endpoints[label_kind_from_string(key)] = url.get<std::string>();
      }
      c.timeout = std::chrono::seconds(j.value("timeout_seconds", 30));
      c.batch_size = j.value("batch_size", std::size_t{32});
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("bad classifier config: ") + e.what());
    }
    c.validate();
    return c;
  }
};

/// Wire protocol: POST `{"texts":[...], "context":[...]}`, reply `{"labels":[...]}`
/// with one integer or null per text.
class HttpClassifierClient final : public ClassifierClient {
 public:
  explicit HttpClassifierClient(ClassifierClientConfig config) : config_(std::move(config)) { config_.validate(); }

  bool supports(LabelKind kind) const override { return config_.endpoints.count(kind) != 0; }
  std::size_t batch_size() const override { return config_.batch_size; }

  std::vector<std::optional<int>> classify(LabelKind kind, const std::vector<std::string>& texts,
                                           const std::vector<std::string>& context) override {
    auto url = llm::detail::split_url(config_.endpoints.at(kind));
    httplib::Client client(url.origin);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    nlohmann::json body{{"texts", texts}, {"context", context}};
    auto res = client.Post(url.path, body.dump(), "application/json");
    if (!res) throw BackendError("classifier transport error: " + httplib::to_string(res.error()));
    if (res->status != 200) {
      throw BackendError("classifier HTTP " + std::to_string(res->status) + ": " + llm::detail::excerpt(res->body),
                         res->status);
    }
    try {
      auto doc = nlohmann::json::parse(res->body);
      std::vector<std::optional<int>> out;
      for (const auto& v : doc.at("labels")) {
        if (v.is_null()) {
          out.emplace_back();
        } else if (v.is_number() && std::floor(v.get<double>()) == v.get<double>()) {
          // Classifier services commonly emit 1.0 for 1.
          out.emplace_back(static_cast<int>(v.get<double>()));
        } else {
          throw BackendError("classifier label must be an integer or null");
        }
      }
      return out;
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("malformed classifier reply: ") + e.what());
    }
  }

 private:
  ClassifierClientConfig config_;
};

// ---------------------------------------------------------------------------
// Dialog annotation

struct AnnotationResult {
  DialogRecord record;
  std::vector<std::string> warnings;
};

/// Fills talktime on every turn and, when a client is given, each label
/// kind it supports on the turns of the matching speaker. Failed or invalid
/// classifier output leaves the label absent and adds a warning.
inline AnnotationResult annotate_dialog(const DialogRecord& input, ClassifierClient* client = nullptr) {
  AnnotationResult result{input, {}};
  auto& turns = result.record.session.history;
  for (auto& t : turns) {
    AnnotationSet fresh;
    fresh.talktime = talktime(t.text);
    t.annotations = fresh;
  }
  if (client == nullptr) return result;

  for (auto kind : kAllLabelKinds) {
    if (!client->supports(kind)) continue;
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < turns.size(); ++i) {
      if (turns[i].speaker == labeled_speaker(kind)) positions.push_back(i);
    }
    const auto batch = std::max<std::size_t>(client->batch_size(), 1);
    for (std::size_t start = 0; start < positions.size(); start += batch) {
      auto end = std::min(positions.size(), start + batch);
      std::vector<std::string> texts, context;
      for (auto k = start; k < end; ++k) {
        auto i = positions[k];
        texts.push_back(turns[i].text);
        context.push_back(i == 0 ? std::string{} : turns[i - 1].text);
      }
      std::vector<std::optional<int>> labels;
      try {
        labels = client->classify(kind, texts, context);
      } catch (const std::exception& e) {
        result.warnings.push_back(input.dialog_id + ": " + std::string(to_string(kind)) + " unavailable: " + e.what());
        continue;
      }
      if (labels.size() != texts.size()) {
        result.warnings.push_back(input.dialog_id + ": " + std::string(to_string(kind)) +
                                  " classifier returned a wrong number of labels");
        continue;
      }
      for (auto k = start; k < end; ++k) {
        const auto& label = labels[k - start];
        if (!label) continue;
        if (*label < 0 || *label > max_label(kind)) {
          result.warnings.push_back(input.dialog_id + ": turn " + std::to_string(positions[k]) + " " +
                                    std::string(to_string(kind)) + " label out of range");
          continue;
        }
        slot(*turns[positions[k]].annotations, kind) = *label;
      }
    }
  }
  for (const auto& t : turns) validate_placement(*t.annotations, t.speaker);
  return result;
}

// ---------------------------------------------------------------------------
// Dataset statistics

struct LabelCount {
  std::size_t positive = 0;  // label == 1 for binary kinds
  std::size_t labeled = 0;

  std::optional<double> frequency() const {
    if (labeled == 0) return std::nullopt;
    return static_cast<double>(positive) / static_cast<double>(labeled);
  }
};

struct DatasetStats {
  std::size_t dialog_count = 0;
  double avg_turns = 0.0;
  std::size_t max_turns = 0;
  std::size_t min_turns = 0;

  LabelCount uptake;
  LabelCount focusing;
  LabelCount reasoning;
  std::array<std::size_t, 2> ttm_counts{};  // 0 other, 1 keeping everyone together
  std::array<std::size_t, 5> stm_counts{};

  std::map<int, std::size_t> tutor_talktime;  // talktime -> number of tutor turns
  std::map<int, std::size_t> student_talktime;
  std::size_t tutor_turn_count = 0;
  std::size_t student_turn_count = 0;

  template <std::size_t N>
  static std::array<std::optional<double>, N> distribution(const std::array<std::size_t, N>& counts) {
    std::size_t total = 0;
    for (auto c : counts) total += c;
    std::array<std::optional<double>, N> out{};
    if (total == 0) return out;
    for (std::size_t i = 0; i < N; ++i) out[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    return out;
  }
};

/// Turn counts are total messages per dialog. Label frequencies divide by
/// the number of labeled turns of that kind.
inline DatasetStats dataset_stats(const std::vector<DialogRecord>& dataset) {
  if (dataset.empty()) throw DomainError("dataset_stats requires a non-empty dataset");
  DatasetStats s;
  s.dialog_count = dataset.size();
  s.min_turns = std::numeric_limits<std::size_t>::max();
  std::size_t total_turns = 0;
  auto count_binary = [](LabelCount& c, const std::optional<int>& v) {
    if (!v) return;
    ++c.labeled;
    if (*v == 1) ++c.positive;
  };
  for (const auto& r : dataset) {
    const auto& turns = r.session.history;
    total_turns += turns.size();
    s.max_turns = std::max(s.max_turns, turns.size());
    s.min_turns = std::min(s.min_turns, turns.size());
    for (const auto& t : turns) {
      auto tt = talktime(t.text);
      if (t.speaker == Speaker::tutor) {
        ++s.tutor_talktime[tt];
        ++s.tutor_turn_count;
      } else {
        ++s.student_talktime[tt];
        ++s.student_turn_count;
      }
      if (!t.annotations) continue;
      const auto& a = *t.annotations;
      if (t.speaker == Speaker::tutor) {
        count_binary(s.uptake, a.uptake);
        count_binary(s.focusing, a.focusing);
        if (a.ttm && *a.ttm >= 0 && *a.ttm <= 1) ++s.ttm_counts[static_cast<std::size_t>(*a.ttm)];
      } else {
        count_binary(s.reasoning, a.reasoning);
        if (a.stm && *a.stm >= 0 && *a.stm <= 4) ++s.stm_counts[static_cast<std::size_t>(*a.stm)];
      }
    }
  }
  s.avg_turns = static_cast<double>(total_turns) / static_cast<double>(dataset.size());
  return s;
}

inline nlohmann::ordered_json to_json(const DatasetStats& s) {
  using nlohmann::ordered_json;
  auto opt = [](std::optional<double> v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  auto hist = [](const std::map<int, std::size_t>& h) {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : h) j[std::to_string(k)] = v;
    return j;
  };
  auto dist = [&](const auto& counts) {
    ordered_json j = ordered_json::object();
    auto d = DatasetStats::distribution(counts);
    for (std::size_t i = 0; i < d.size(); ++i) j[std::to_string(i)] = opt(d[i]);
    return j;
  };
  return ordered_json{
      {"dialog_count", s.dialog_count},
      {"turns", {{"average", s.avg_turns}, {"maximum", s.max_turns}, {"minimum", s.min_turns}}},
      {"tutor",
       {{"uptake", opt(s.uptake.frequency())},
        {"focusing", opt(s.focusing.frequency())},
        {"ttm", dist(s.ttm_counts)},
        {"labeled", {{"uptake", s.uptake.labeled}, {"focusing", s.focusing.labeled}}}}},
      {"student",
       {{"reasoning", opt(s.reasoning.frequency())},
        {"stm", dist(s.stm_counts)},
        {"labeled", {{"reasoning", s.reasoning.labeled}}}}},
      {"talktime",
       {{"tutor", hist(s.tutor_talktime)},
        {"student", hist(s.student_talktime)},
        {"tutor_turns", s.tutor_turn_count},
        {"student_turns", s.student_turn_count}}},
  };
}

}  // namespace tutorgen::annotate
