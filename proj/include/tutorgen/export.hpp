#pragma once

// Fine-tuning export: dialogs as chat-format JSONL (train/eval split at
// dialog granularity) and the QLoRA training configuration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutorgen/dialog.hpp"
#include "tutorgen/error.hpp"
#include "tutorgen/io.hpp"
#include "tutorgen/llm.hpp"
#include "tutorgen/record.hpp"

namespace tutorgen::exporter {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Training configuration

struct FinetuneConfig {
  int adapter_rank = 8;
  int scaling_factor = 16;
  double dropout = 0.05;
  double learning_rate = 2e-4;
  std::string scheduler = "cosine";
  int epochs = 3;
  int quantization_bits = 8;

  bool operator==(const FinetuneConfig&) const = default;
};

inline ordered_json to_json(const FinetuneConfig& c) {
  return ordered_json{{"adapter_rank", c.adapter_rank},   {"scaling_factor", c.scaling_factor},
                      {"dropout", c.dropout},             {"learning_rate", c.learning_rate},
                      {"scheduler", c.scheduler},         {"epochs", c.epochs},
                      {"quantization_bits", c.quantization_bits}};
}

inline FinetuneConfig config_from_json(const nlohmann::json& j) {
  FinetuneConfig c;
  try {
    c.adapter_rank = j.at("adapter_rank").get<int>();
    c.scaling_factor = j.at("scaling_factor").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.scheduler = j.at("scheduler").get<std::string>();
    c.epochs = j.at("epochs").get<int>();
    c.quantization_bits = j.at("quantization_bits").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad finetune config: ") + e.what());
  }
  return c;
}

inline std::string serialize_config(const FinetuneConfig& c) { return to_json(c).dump(2) + "\n"; }

/// Applies `key=value` overrides on top of the defaults.
inline FinetuneConfig apply_overrides(const std::map<std::string, std::string>& overrides) {
  FinetuneConfig c;
  auto as_int = [](const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    int out = 0;
    try {
      out = std::stoi(v, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != v.size() || v.empty()) throw ValidationError("override '" + key + "' expects an integer");
    return out;
  };
  auto as_real = [](const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out = 0;
    try {
      out = std::stod(v, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != v.size() || v.empty()) throw ValidationError("override '" + key + "' expects a number");
    return out;
  };
  for (const auto& [key, value] : overrides) {
    if (key == "adapter_rank") {
      c.adapter_rank = as_int(key, value);
    } else if (key == "scaling_factor") {
      c.scaling_factor = as_int(key, value);
    } else if (key == "dropout") {
      c.dropout = as_real(key, value);
    } else if (key == "learning_rate") {
      c.learning_rate = as_real(key, value);
    } else if (key == "scheduler") {
      c.scheduler = value;
    } else if (key == "epochs") {
      c.epochs = as_int(key, value);
    } else if (key == "quantization_bits") {
      c.quantization_bits = as_int(key, value);
    } else {
      throw ValidationError("unknown config key '" + key + "'");
    }
  }
  if (c.adapter_rank < 1 || c.scaling_factor < 1 || c.epochs < 1) {
    throw ValidationError("adapter_rank, scaling_factor and epochs must be positive");
  }
  if (c.dropout < 0.0 || c.dropout >= 1.0) throw ValidationError("dropout must be in [0, 1)");
  if (c.learning_rate <= 0.0) throw ValidationError("learning_rate must be positive");
  if (c.quantization_bits != 4 && c.quantization_bits != 8) throw ValidationError("quantization_bits must be 4 or 8");
  return c;
}

inline FinetuneConfig emit_config(const std::map<std::string, std::string>& overrides,
                                  const std::filesystem::path& out) {
  auto c = apply_overrides(overrides);
  io::write_file(out, serialize_config(c));
  return c;
}

// ---------------------------------------------------------------------------
// Chat-format data

struct ChatExample {
  std::string dialog_id;
  std::vector<llm::ChatMessage> messages;
};

/// Tutor system prompt with grounding, then student turns as user messages
/// and tutor turns as assistant messages. Returns nullopt if the dialog does
/// not alternate student/tutor or does not end on a tutor turn.
inline std::optional<ChatExample> to_chat_example(const DialogRecord& r) {
  const auto& turns = r.session.history;
  if (turns.empty() || turns.back().speaker != Speaker::tutor) return std::nullopt;
  ChatExample ex{r.dialog_id, {}};
  ex.messages.push_back({llm::Role::system, dialog::tutor_system_prompt(r.session.grounding)});
  for (std::size_t i = 0; i < turns.size(); ++i) {
    auto expected = i % 2 == 0 ? Speaker::student : Speaker::tutor;
    if (turns[i].speaker != expected || turns[i].text.empty()) return std::nullopt;
    ex.messages.push_back({expected == Speaker::student ? llm::Role::user : llm::Role::assistant, turns[i].text});
  }
  return ex;
}

inline std::string to_jsonl_line(const ChatExample& ex) {
  ordered_json msgs = ordered_json::array();
  for (const auto& m : ex.messages) {
    msgs.push_back(ordered_json{{"role", m.role == llm::Role::system ? "system"
                                         : m.role == llm::Role::user ? "user"
                                                                     : "assistant"},
                                {"content", m.content}});
  }
  return ordered_json{{"messages", msgs}}.dump() + "\n";
}

struct ExportResult {
  std::vector<ChatExample> train;
  std::vector<ChatExample> eval;
  std::vector<std::string> skipped;  // dialog ids that failed alternation
};

/// Seeded shuffle of whole dialogs, then the first round(n * ratio) go to train.
inline ExportResult split_chat_examples(const std::vector<DialogRecord>& dataset, double split_ratio,
                                        std::uint64_t seed) {
  if (dataset.empty()) throw DomainError("export requires a non-empty dataset");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ValidationError("split ratio must be in (0, 1)");
  ExportResult out;
  std::vector<ChatExample> examples;
  for (const auto& r : dataset) {
    if (auto ex = to_chat_example(r)) {
      examples.push_back(std::move(*ex));
    } else {
      out.skipped.push_back(r.dialog_id);
    }
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = examples.size(); i > 1; --i) {
    std::swap(examples[i - 1], examples[rng() % i]);
  }
  auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(examples.size()) * split_ratio));
  n_train = std::min(n_train, examples.size());
  out.train.assign(std::make_move_iterator(examples.begin()),
                   std::make_move_iterator(examples.begin() + static_cast<std::ptrdiff_t>(n_train)));
  out.eval.assign(std::make_move_iterator(examples.begin() + static_cast<std::ptrdiff_t>(n_train)),
                  std::make_move_iterator(examples.end()));
  return out;
}

/// Writes train.jsonl and eval.jsonl into `out_dir`.
inline ExportResult export_chat_format(const std::vector<DialogRecord>& dataset, double split_ratio,
                                       std::uint64_t seed, const std::filesystem::path& out_dir) {
  auto result = split_chat_examples(dataset, split_ratio, seed);
  std::filesystem::create_directories(out_dir);
  std::string train, eval;
  for (const auto& ex : result.train) train += to_jsonl_line(ex);
  for (const auto& ex : result.eval) eval += to_jsonl_line(ex);
  io::write_file(out_dir / "train.jsonl", train);
  io::write_file(out_dir / "eval.jsonl", eval);
  return result;
}

}  // namespace tutorgen::exporter
