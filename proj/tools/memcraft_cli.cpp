// memcraft: command-line driver for memory construction, reward computation
// and the toy trainer.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "memcraft/config.hpp"
#include "memcraft/dataset.hpp"
#include "memcraft/pipeline.hpp"
#include "memcraft/toy_trainer.hpp"

namespace fs = std::filesystem;
using namespace memcraft;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::int64_t> seed;
  bool mock = false;
  bool verbose = false;
  std::string work_dir;
};

struct DatasetArgs {
  std::string path;
  std::string format = "generic";
  std::string dialogue;
};

RunConfig resolve_config(const Globals& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.work_dir.empty()) cfg.work_dir = g.work_dir;
  if (g.mock) apply_mock(cfg);
  if (!fs::exists(cfg.prompts_dir) && fs::exists(MEMCRAFT_INSTALLED_PROMPTS)) {
    cfg.prompts_dir = MEMCRAFT_INSTALLED_PROMPTS;
  }
  cfg.validate();
  return cfg;
}

void add_dataset_options(CLI::App* cmd, DatasetArgs& args, bool dialogue_option = true) {
  cmd->add_option("--dataset", args.path, "Dataset file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--format", args.format, "generic | longmemeval | locomo | perltqa")->capture_default_str();
  if (dialogue_option) cmd->add_option("--dialogue", args.dialogue, "Only this dialogue id");
}

std::vector<Dialogue> load_dialogues(const DatasetArgs& args) {
  auto result = ingest(args.path, parse_dataset_format(args.format));
  if (args.dialogue.empty()) return std::move(result.dialogues);
  for (auto& d : result.dialogues) {
    if (d.dialogue_id == args.dialogue) return {std::move(d)};
  }
  throw std::runtime_error("dialogue '" + args.dialogue + "' not in " + args.path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memcraft: multi-component dialogue memory construction"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "INI run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override [run] seed");
  app.add_flag("--mock", g.mock, "Offline mock backends ([mock] script)");
  app.add_option("--work-dir", g.work_dir, "Override [paths] work_dir");
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Normalize a dataset into the generic format");
  DatasetArgs ingest_args;
  std::string ingest_out;
  add_dataset_options(ingest_cmd, ingest_args, false);
  ingest_cmd->add_option("--output", ingest_out, "Output file (default <work_dir>/dataset.json)");

  // build
  auto* build_cmd = app.add_subcommand("build", "Build memory banks session by session");
  DatasetArgs build_args;
  std::optional<std::size_t> stop_after;
  bool fresh = false;
  add_dataset_options(build_cmd, build_args);
  build_cmd->add_option("--stop-after", stop_after, "Stop once this many sessions are done");
  build_cmd->add_flag("--fresh", fresh, "Ignore existing checkpoints");

  // gen-qa
  auto* qa_cmd = app.add_subcommand("gen-qa", "Generate synthetic questions per session");
  DatasetArgs qa_args;
  add_dataset_options(qa_cmd, qa_args);

  // rollout-reward
  auto* rr_cmd = app.add_subcommand("rollout-reward", "Sample rollouts per session and score them");
  DatasetArgs rr_args;
  std::optional<std::size_t> rr_session;
  add_dataset_options(rr_cmd, rr_args);
  rr_cmd->add_option("--session", rr_session, "Only this session (1-based), printed to stdout");

  // answer
  auto* answer_cmd = app.add_subcommand("answer", "Answer a question from a built bank");
  DatasetArgs answer_args;
  std::string question, question_date;
  add_dataset_options(answer_cmd, answer_args);
  answer_cmd->add_option("--question", question, "Question text")->required();
  answer_cmd->add_option("--date", question_date, "Question date YYYY-MM-DD");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Accuracy per question category");
  DatasetArgs eval_args;
  std::string report_out;
  add_dataset_options(eval_cmd, eval_args);
  eval_cmd->add_option("--output", report_out, "CSV report (default <work_dir>/report.csv)");

  // train-toy
  auto* toy_cmd = app.add_subcommand("train-toy", "Train the tabular toy policy and write curves");
  std::string curves_out;
  std::optional<double> density, alpha;
  std::optional<std::size_t> epochs;
  std::optional<std::string> env_name;
  bool unweighted = false;
  toy_cmd->add_option("--output", curves_out, "CSV curve (default <work_dir>/curves.csv)");
  toy_cmd->add_option("--density", density, "Reward density in (0, 1]");
  toy_cmd->add_option("--alpha", alpha, "Attribution weight");
  toy_cmd->add_option("--epochs", epochs, "Training epochs");
  toy_cmd->add_option("--env", env_name, "bandit | attribution");
  toy_cmd->add_flag("--unweighted", unweighted, "All weights 1 (plain GRPO)");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    RunConfig cfg = resolve_config(g);

    if (ingest_cmd->parsed()) {
      auto result = ingest(ingest_args.path, parse_dataset_format(ingest_args.format));
      const fs::path out = ingest_out.empty() ? cfg.work_dir / "dataset.json" : fs::path(ingest_out);
      write_generic(result.dialogues, out);
      std::size_t sessions = 0, questions = 0;
      for (const auto& d : result.dialogues) {
        sessions += d.sessions.size();
        questions += d.questions.size();
      }
      std::printf("%zu dialogues, %zu sessions, %zu questions (%zu records skipped, %zu questions dropped) -> %s\n",
                  result.dialogues.size(), sessions, questions, result.skipped_records,
                  result.dropped_questions, out.string().c_str());
      return 0;
    }

    if (toy_cmd->parsed()) {
      auto train = cfg.toy.train;
      train.adrpo = cfg.adrpo;
      train.weighting = cfg.weighting;
      train.seed = static_cast<std::uint64_t>(cfg.seed);
      if (density) train.reward_density = *density;
      if (alpha) train.adrpo.alpha = *alpha;
      if (epochs) train.epochs = *epochs;
      if (unweighted) train.weighting = WeightingMode::unweighted;
      const std::string env_kind = env_name.value_or(cfg.toy.environment);
      ToyEnvironment env;
      if (env_kind == "bandit") env = ToyEnvironment::bandit();
      else if (env_kind == "attribution") env = ToyEnvironment::attribution_sensitive();
      else throw std::invalid_argument("unknown toy environment '" + env_kind + "'");
      const auto curve = train_toy(env, train);
      const fs::path out = curves_out.empty() ? cfg.work_dir / "curves.csv" : fs::path(curves_out);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      write_curve_csv(curve, out);
      std::printf("epoch %zu: mean_reward %.4f (initial %.4f) -> %s\n", curve.back().epoch,
                  curve.back().mean_reward, curve.front().mean_reward, out.string().c_str());
      return 0;
    }

    const auto svc = Services::create(cfg);

    if (build_cmd->parsed()) {
      for (const auto& d : load_dialogues(build_args)) {
        const auto r = build_memory(d, svc, {!fresh, stop_after});
        std::printf("%s: %zu/%zu sessions, %zu entries, core %zu chars, digest %s\n", d.dialogue_id.c_str(),
                    r.sessions_completed, d.sessions.size(), r.bank.entry_count(), r.bank.core().length(),
                    bank_digest(r.bank).c_str());
      }
      return 0;
    }

    if (qa_cmd->parsed()) {
      for (const auto& d : load_dialogues(qa_args)) {
        const auto qa = generate_session_qa(d, svc);
        std::size_t n = 0;
        for (const auto& s : qa) n += s.pairs.size();
        std::printf("%s: %zu questions over %zu sessions\n", d.dialogue_id.c_str(), n, qa.size());
      }
      return 0;
    }

    if (rr_cmd->parsed()) {
      for (const auto& d : load_dialogues(rr_args)) {
        if (!rr_session) {
          rollout_and_reward_all(d, svc);
          std::printf("%s: rewards -> %s\n", d.dialogue_id.c_str(),
                      dialogue_paths(cfg, d.dialogue_id).rewards().string().c_str());
          continue;
        }
        const auto qa_all = load_session_qa(dialogue_paths(cfg, d.dialogue_id).qa());
        const SessionQa* sq = nullptr;
        for (const auto& s : qa_all) {
          if (s.session == *rr_session) sq = &s;
        }
        if (!sq) throw std::runtime_error("no questions for session " + std::to_string(*rr_session));
        for (const auto& o : rollout_and_reward(d, *rr_session, sq->pairs, svc)) {
          std::printf("rollout %zu  valid %d  r_task %.3f  ell %.3f  reward %.4f  adv %+.4f  dominant %s\n",
                      o.rollout, o.record.valid ? 1 : 0, o.record.r_task, o.record.ell_aggregate,
                      o.record.reward, o.advantage,
                      o.weights.dominant ? std::string(short_name(*o.weights.dominant)).c_str() : "none");
        }
      }
      return 0;
    }

    if (answer_cmd->parsed()) {
      if (answer_args.dialogue.empty()) throw std::invalid_argument("answer needs --dialogue");
      const auto dialogues = load_dialogues(answer_args);
      const auto& d = dialogues.front();
      const auto snap = load_snapshot(dialogue_paths(cfg, d.dialogue_id).snapshot(d.sessions.size()));
      const auto ans = answer_question(svc.answerer(), snap.bank, snap.store, question, question_date);
      std::printf("%s\n\nretrieved:\n", ans.text.c_str());
      for (const auto& hit : ans.trace.ranked) {
        std::printf("  #%llu %-10s %.4f\n", static_cast<unsigned long long>(hit.entry_id.value),
                    std::string(to_string(hit.mem_type)).c_str(), hit.score);
      }
      return 0;
    }

    if (eval_cmd->parsed()) {
      const auto report = evaluate(load_dialogues(eval_args), svc);
      const fs::path out = report_out.empty() ? cfg.work_dir / "report.csv" : fs::path(report_out);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      std::ofstream(out) << report.to_csv();
      std::printf("%s-> %s\n", report.to_table().c_str(), out.string().c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
