// tutorgen: command-line front end for the corpus, generation, annotation,
// metrics, export and study tools.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tutorgen/tutorgen.hpp"

namespace tg = tutorgen;

namespace {

nlohmann::json read_json_file(const std::string& path) {
  auto text = tg::io::read_file(path);
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw tg::FormatError(path + ": not valid JSON");
  return j;
}

tg::llm::BackendConfig read_backend(const std::string& path) {
  try {
    auto cfg = read_json_file(path).get<tg::llm::BackendConfig>();
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw tg::ValidationError(path + ": " + e.what());
  }
}

std::vector<std::string> split_csv_arg(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int exit_code(tg::ErrorKind kind) {
  switch (kind) {
    case tg::ErrorKind::format:
    case tg::ErrorKind::validation: return 3;
    case tg::ErrorKind::io: return 4;
    case tg::ErrorKind::backend:
    case tg::ErrorKind::timeout: return 5;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic tutoring dialog toolkit"};
  app.require_subcommand(1);

  // corpus ------------------------------------------------------------------
  auto* corpus_cmd = app.add_subcommand("corpus", "Worksheet corpus tools");
  corpus_cmd->require_subcommand(1);
  std::string corpus_path;
  auto* corpus_validate = corpus_cmd->add_subcommand("validate", "Check a worksheet file");
  corpus_validate->add_option("path", corpus_path)->required();
  auto* corpus_stats = corpus_cmd->add_subcommand("stats", "Print corpus statistics as JSON");
  corpus_stats->add_option("path", corpus_path)->required();

  // synthgen ----------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synthgen", "Generate synthetic dialogs");
  synth_cmd->require_subcommand(1);
  auto* synth_run = synth_cmd->add_subcommand("run", "Run a generation job (resumable)");
  std::string synth_corpus, synth_out, synth_profiles = "mia,alex,jordan,isabella", synth_policy = "random:0";
  std::string tutor_cfg, student_cfg;
  int parallelism = 4, max_turns = tg::kDefaultMaxTutorTurns;
  synth_run->add_option("--corpus", synth_corpus)->required();
  synth_run->add_option("--out", synth_out)->required();
  synth_run->add_option("--profiles", synth_profiles)->capture_default_str();
  synth_run->add_option("--policy", synth_policy, "all | random:<seed> | fixed:<i>")->capture_default_str();
  synth_run->add_option("--parallelism", parallelism)->capture_default_str();
  synth_run->add_option("--tutor-backend", tutor_cfg, "BackendConfig JSON file")->required();
  synth_run->add_option("--student-backend", student_cfg, "BackendConfig JSON file")->required();
  synth_run->add_option("--max-tutor-turns", max_turns)->capture_default_str();
  bool synth_quiet = false;
  synth_run->add_flag("--quiet", synth_quiet);

  // annotate ----------------------------------------------------------------
  auto* ann_cmd = app.add_subcommand("annotate", "Dialog annotation");
  ann_cmd->require_subcommand(1);
  std::string ann_in, ann_out, ann_classifier;
  auto* ann_run = ann_cmd->add_subcommand("run", "Add talktime and classifier labels");
  ann_run->add_option("--in", ann_in)->required();
  ann_run->add_option("--out", ann_out)->required();
  ann_run->add_option("--classifier-config", ann_classifier);
  auto* ann_stats = ann_cmd->add_subcommand("stats", "Print dataset statistics as JSON");
  ann_stats->add_option("--in", ann_in)->required();

  // metrics -----------------------------------------------------------------
  auto* met_cmd = app.add_subcommand("metrics", "Evaluation metrics");
  met_cmd->require_subcommand(1);
  std::string met_dataset, met_ratings, met_out, met_help;
  auto* met_report = met_cmd->add_subcommand("report", "Write report.json and curve CSVs");
  met_report->add_option("--dataset", met_dataset)->required();
  met_report->add_option("--ratings", met_ratings);
  met_report->add_option("--helpfulness", met_help, "session_id,...,arm,score CSV");
  met_report->add_option("--out", met_out)->required();

  // export ------------------------------------------------------------------
  auto* exp_cmd = app.add_subcommand("export", "Fine-tuning export");
  exp_cmd->require_subcommand(1);
  std::string exp_in, exp_out_dir, exp_out;
  double split = 0.9;
  unsigned long long seed = 0;
  std::vector<std::string> sets;
  auto* exp_ft = exp_cmd->add_subcommand("finetune", "Chat-format train/eval JSONL");
  exp_ft->add_option("--in", exp_in)->required();
  exp_ft->add_option("--out-dir", exp_out_dir)->required();
  exp_ft->add_option("--split", split)->capture_default_str();
  exp_ft->add_option("--seed", seed)->capture_default_str();
  auto* exp_cfg = exp_cmd->add_subcommand("config", "Write the adapter training config");
  exp_cfg->add_option("--out", exp_out)->required();
  exp_cfg->add_option("--set", sets, "key=value override")->take_all();

  // serve -------------------------------------------------------------------
  auto* serve_cmd = app.add_subcommand("serve", "Run the study service");
  std::string serve_cfg, host = "127.0.0.1";
  int port = 8080;
  serve_cmd->add_option("--config", serve_cfg)->required();
  serve_cmd->add_option("--port", port)->capture_default_str();
  serve_cmd->add_option("--host", host)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*corpus_validate) {
      auto ws = tg::corpus::load_worksheets(corpus_path);
      std::size_t questions = 0;
      for (const auto& w : ws) questions += w.questions.size();
      std::cout << "ok: " << ws.size() << " worksheets, " << questions << " questions\n";
    } else if (*corpus_stats) {
      auto ws = tg::corpus::load_worksheets(corpus_path);
      std::cout << tg::corpus::to_json(tg::corpus::corpus_stats(ws)).dump(2) << "\n";
    } else if (*synth_run) {
      tg::synthgen::GenerationJob job;
      job.corpus_path = synth_corpus;
      job.output_path = synth_out;
      job.profiles = split_csv_arg(synth_profiles);
      job.policy = tg::synthgen::WrongOptionPolicy::parse(synth_policy);
      job.parallelism = parallelism;
      job.max_tutor_turns = max_turns;
      job.tutor_backend = read_backend(tutor_cfg);
      job.student_backend = read_backend(student_cfg);
      tg::synthgen::RunOptions opts;
      opts.quiet = synth_quiet;
      auto report = tg::synthgen::run_job(job, opts);
      auto out = tg::synthgen::to_json(report);
      out["policy"] = job.policy.to_string();
      std::cout << out.dump(2) << "\n";
      if (!report.failed.empty()) return 6;
    } else if (*ann_run) {
      std::unique_ptr<tg::annotate::ClassifierClient> client;
      if (!ann_classifier.empty()) {
        client = std::make_unique<tg::annotate::HttpClassifierClient>(
            tg::annotate::ClassifierClientConfig::from_json(read_json_file(ann_classifier)));
      }
      auto dataset = tg::synthgen::read_dataset(ann_in);
      std::size_t warnings = 0;
      for (auto& record : dataset) {
        auto result = tg::annotate::annotate_dialog(record, client.get());
        for (const auto& w : result.warnings) std::cerr << "warning: " << record.dialog_id << ": " << w << "\n";
        warnings += result.warnings.size();
        record = std::move(result.record);
      }
      tg::synthgen::write_dataset(dataset, ann_out);
      std::cout << "annotated " << dataset.size() << " dialogs, " << warnings << " warnings\n";
    } else if (*ann_stats) {
      auto dataset = tg::synthgen::read_dataset(ann_in);
      std::cout << tg::annotate::to_json(tg::annotate::dataset_stats(dataset)).dump(2) << "\n";
    } else if (*met_report) {
      tg::metrics::ReportInputs in;
      in.dataset = tg::synthgen::read_dataset(met_dataset);
      if (!met_ratings.empty()) in.ratings = tg::metrics::parse_ratings_csv(tg::io::read_file(met_ratings));
      if (!met_help.empty()) in.helpfulness = tg::metrics::parse_helpfulness_csv(tg::io::read_file(met_help));
      auto report = tg::metrics::build_report(in);
      tg::metrics::write_report(report, met_out);
      std::cout << tg::metrics::to_json(report).dump(2) << "\n";
    } else if (*exp_ft) {
      auto dataset = tg::synthgen::read_dataset(exp_in);
      auto result = tg::exporter::export_chat_format(dataset, split, seed, exp_out_dir);
      for (const auto& id : result.skipped) std::cerr << "skipped non-alternating dialog " << id << "\n";
      std::cout << "train " << result.train.size() << ", eval " << result.eval.size() << "\n";
    } else if (*exp_cfg) {
      std::map<std::string, std::string> overrides;
      for (const auto& kv : sets) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw tg::ValidationError("--set expects key=value, got '" + kv + "'");
        overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      tg::exporter::emit_config(overrides, exp_out);
    } else if (*serve_cmd) {
      auto cfg_json = read_json_file(serve_cfg);
      auto cfg = tg::study::StudyConfig::from_json(cfg_json, std::filesystem::path(serve_cfg).parent_path());
      auto svc = std::make_unique<tg::study::StudyService>(cfg, tg::corpus::load_worksheets(cfg.corpus_path));
      std::cerr << "listening on " << host << ":" << port << "\n";
      tg::study::serve(*svc, host, port);
    }
  } catch (const tg::Error& e) {
    std::cerr << "error (" << tg::to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
