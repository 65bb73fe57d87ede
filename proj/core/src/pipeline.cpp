#include "memcraft/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "memcraft/adrpo.hpp"

namespace memcraft {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- services

Services Services::create(const RunConfig& cfg) {
  cfg.validate();
  Services s;
  s.cfg = cfg;
  s.prompts = PromptSet::load(cfg.prompts_dir);
  s.agent = make_gateway(cfg.agent);
  s.answer = make_gateway(cfg.answer);
  s.judge = make_gateway(cfg.judge);
  s.qa_gen = make_gateway(cfg.qa_gen);
  s.embed = make_gateway(cfg.embed);
  return s;
}

EmbedFn Services::embed_fn() const { return embed->embed_fn(); }

JudgeFn Services::judge_fn() const {
  if (cfg.judge_mode == JudgeMode::lexical) return lexical_judge();
  return llm_judge(*judge, prompts.judge);
}

Answerer Services::answerer() const {
  return Answerer{answer.get(), &prompts.answer, embed_fn(), cfg.k_answer};
}

// ------------------------------------------------------------------ agents

std::string format_retrieved(const MemoryBank& bank, const RetrievalResult& retrieved) {
  if (retrieved.ranked.empty()) return "(none)";
  std::string out;
  for (const auto& hit : retrieved.ranked) {
    const auto* e = bank.find(hit.entry_id);
    if (!e) continue;
    out += fmt::format("[{}] {}\n", upper_label(e->mem_type), e->content);
  }
  if (!out.empty()) out.pop_back();
  return out;
}

namespace {

std::string retrieval_query(const Session& session) {
  auto q = session.transcript();
  return trim(q).empty() ? session.timestamp.to_string() : q;
}

ChatRequest render(const PromptTemplate& t, const std::map<std::string, std::string>& vars,
                   double temperature, std::optional<std::int64_t> seed) {
  ChatRequest req;
  req.system_prompt = PromptTemplate::render(t.system, vars);
  req.user_content = PromptTemplate::render(t.user, vars);
  req.temperature = temperature;
  req.seed = seed;
  return req;
}

void write_text_atomic(const fs::path& file, const std::string& text) {
  const fs::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, file);
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const fs::path& file) {
  std::vector<std::string> lines;
  std::ifstream in(file);
  for (std::string line; std::getline(in, line);) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

ordered_json entry_counts_json(const PerEntryType<long>& v) {
  ordered_json j;
  for (auto t : kEntryTypes) j[std::string(short_name(t))] = v[index_of(t)];
  return j;
}

}  // namespace

AgentOutputs run_agents(const Services& svc, const MemoryBank& bank, const EmbeddingStore& store,
                        const Session& session, double temperature, std::optional<std::int64_t> seed,
                        std::vector<std::string>* errors) {
  const auto retrieved = store.top_k(retrieval_query(session), svc.cfg.k_construct, std::nullopt, svc.embed_fn());
  const std::map<std::string, std::string> vars{
      {"session_date", session.timestamp.to_string()},
      {"core", bank.core().text.empty() ? "(empty)" : bank.core().text},
      {"retrieved", format_retrieved(bank, retrieved)},
      {"session", session.transcript()},
  };

  PerComponent<std::future<std::string>> calls;
  for (auto c : kComponents) {
    auto req = render(svc.prompts.agent(c), vars, temperature, seed);
    calls[index_of(c)] = std::async(std::launch::async, [&svc, req = std::move(req)] { return svc.agent->chat(req); });
  }
  AgentOutputs out;
  for (auto c : kComponents) {
    try {
      out[c] = calls[index_of(c)].get();
    } catch (const GatewayError& e) {
      if (errors) errors->push_back(fmt::format("{} agent: {}", short_name(c), e.what()));
    }
  }
  return out;
}

std::string_view to_string(CompressionPath p) {
  switch (p) {
    case CompressionPath::none: return "none";
    case CompressionPath::first_pass: return "first_pass";
    case CompressionPath::aggressive_pass: return "aggressive_pass";
    case CompressionPath::truncated: return "truncated";
  }
  return "?";
}

std::pair<MemoryBank, CompressionPath> compress_core(const Services& svc, const MemoryBank& bank) {
  const std::size_t cap = bank.core().capacity_chars;
  if (bank.core().length() <= cap) return {bank, CompressionPath::none};

  auto attempt = [&](const PromptTemplate& t, const std::string& text) {
    const std::map<std::string, std::string> vars{{"core", text}, {"capacity", std::to_string(cap)}};
    return trim(svc.agent->chat(render(t, vars, 0.0, std::nullopt)));
  };
  std::string text = attempt(svc.prompts.compress, bank.core().text);
  if (!text.empty() && utf8_length(text) <= cap) return {bank.with_core_text(text), CompressionPath::first_pass};

  const std::string& input = text.empty() ? bank.core().text : text;
  std::string second = attempt(svc.prompts.compress_aggressive, input);
  if (!second.empty() && utf8_length(second) <= cap) {
    return {bank.with_core_text(second), CompressionPath::aggressive_pass};
  }
  const std::string& longest_try = second.empty() ? input : second;
  spdlog::warn("core compression left {} chars, truncating to {}", utf8_length(longest_try), cap);
  return {bank.with_core_text(utf8_truncate(longest_try, cap)), CompressionPath::truncated};
}

SessionStep apply_session(const Services& svc, const MemoryBank& prev, const EmbeddingStore& prev_store,
                          const Session& session, std::size_t session_number,
                          const AgentOutputs& outputs, GateMode gate) {
  SessionStep step{prev, prev_store, validate_rollout(outputs, prev, svc.embed_fn(), svc.cfg.resolve_threshold),
                   0, {}, CompressionPath::none};
  auto& report = step.report;

  if (report.core_op && report.applicable(Component::core, gate)) {
    auto applied = apply_core_op(step.bank, *report.core_op, whitespace_token_count);
    step.bank = std::move(applied.bank);
    step.core_delta = applied.delta_tokens;
    std::tie(step.bank, step.compression) = compress_core(svc, step.bank);
  }

  const EntryId first_new = step.bank.next_id();
  for (auto t : kEntryTypes) {
    const auto c = component_of(t);
    const auto& ops = report.entry_ops[index_of(t)];
    if (ops.empty() || !report.applicable(c, gate)) continue;
    try {
      step.bank = apply_entry_ops(step.bank, t, ops, session.timestamp);
    } catch (const MemoryError& e) {
      auto& tv = report.per_type[index_of(c)];
      tv.valid = false;
      tv.diagnostics.push_back(e.what());
      report.valid = false;
    }
  }

  std::vector<MemoryEntry> fresh;
  for (auto t : kEntryTypes) {
    for (const auto& e : step.bank.section(t).entries()) {
      if (e.id < first_new) continue;
      step.new_tokens[index_of(t)] += static_cast<long>(whitespace_token_count(e.content));
      fresh.push_back(e);
    }
  }
  if (!fresh.empty()) step.store.upsert(fresh, svc.embed_fn());
  step.bank = step.bank.with_session_cursor(session_number);
  return step;
}

// ------------------------------------------------------------- persistence

fs::path DialoguePaths::snapshot(std::size_t session) const {
  return root / "snapshots" / fmt::format("session_{:04d}", session);
}

DialoguePaths dialogue_paths(const RunConfig& cfg, const std::string& dialogue_id) {
  std::string safe;
  for (char ch : dialogue_id) {
    const auto u = static_cast<unsigned char>(ch);
    safe += (std::isalnum(u) || ch == '-' || ch == '_' || ch == '.') ? ch : '_';
  }
  if (safe.empty() || safe == "." || safe == "..") safe = "dialogue";
  return {cfg.work_dir / safe};
}

void save_snapshot(const Snapshot& s, const fs::path& dir) {
  const fs::path tmp = dir.string() + ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  save_bank(s.bank, tmp);
  s.store.save(tmp / "vectors.jsonl");
  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

Snapshot load_snapshot(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("missing snapshot " + dir.string());
  return {load_bank(dir), EmbeddingStore::load(dir / "vectors.jsonl")};
}

std::vector<TrajectoryStep> load_trajectory(const fs::path& file) {
  std::vector<TrajectoryStep> out;
  for (const auto& line : read_lines(file)) {
    const auto j = json::parse(line);
    TrajectoryStep s;
    s.session = j.at("session").get<std::size_t>();
    s.core_delta = j.at("core_delta").get<long>();
    for (auto t : kEntryTypes) s.new_tokens[index_of(t)] = j.at("new_tokens").at(std::string(short_name(t))).get<long>();
    for (auto c : kComponents) s.valid[index_of(c)] = j.at("valid").at(std::string(short_name(c))).get<bool>();
    s.digest = j.at("digest").get<std::string>();
    out.push_back(std::move(s));
  }
  return out;
}

// ------------------------------------------------------------------- build

namespace {

struct Manifest {
  std::string dialogue_id;
  std::size_t sessions_total = 0;
  std::size_t completed = 0;
  std::vector<std::string> digests;

  std::string dump() const {
    ordered_json j;
    j["dialogue_id"] = dialogue_id;
    j["sessions_total"] = sessions_total;
    j["completed"] = completed;
    j["digests"] = digests;
    return j.dump(2) + "\n";
  }
  static Manifest read(const fs::path& file) {
    const auto j = json::parse(read_text(file));
    return {j.at("dialogue_id").get<std::string>(), j.at("sessions_total").get<std::size_t>(),
            j.at("completed").get<std::size_t>(), j.at("digests").get<std::vector<std::string>>()};
  }
};

}  // namespace

BuildResult build_memory(const Dialogue& dialogue, const Services& svc, const BuildOptions& opts) {
  const auto paths = dialogue_paths(svc.cfg, dialogue.dialogue_id);
  Manifest manifest{dialogue.dialogue_id, dialogue.sessions.size(), 0, {}};
  Snapshot cur{MemoryBank(svc.cfg.core_capacity_chars), {}};
  std::vector<std::string> trajectory;

  if (opts.resume && fs::exists(paths.manifest())) {
    manifest = Manifest::read(paths.manifest());
    if (manifest.dialogue_id != dialogue.dialogue_id || manifest.sessions_total != dialogue.sessions.size()) {
      throw BuildAborted("checkpoint in " + paths.root.string() + " belongs to a different dialogue");
    }
    cur = load_snapshot(paths.snapshot(manifest.completed));
    trajectory = read_lines(paths.trajectory());
    if (trajectory.size() < manifest.completed) throw BuildAborted("trajectory shorter than the checkpoint");
    trajectory.resize(manifest.completed);
    spdlog::info("{}: resuming after session {}", dialogue.dialogue_id, manifest.completed);
  } else {
    fs::remove_all(paths.root);
    fs::create_directories(paths.root);
    save_snapshot(cur, paths.snapshot(0));
    write_text_atomic(paths.trajectory(), "");
    write_text_atomic(paths.manifest(), manifest.dump());
  }

  for (std::size_t tau = manifest.completed + 1; tau <= dialogue.sessions.size(); ++tau) {
    if (opts.stop_after && manifest.completed >= *opts.stop_after) break;
    const Session& session = dialogue.sessions[tau - 1];
    std::vector<std::string> errors;
    const auto outputs = run_agents(svc, cur.bank, cur.store, session, 0.0, std::nullopt, &errors);
    if (!errors.empty()) {
      throw BuildAborted(fmt::format("{} session {}: {}; rerun to resume", dialogue.dialogue_id, tau, errors.front()));
    }
    SessionStep step;
    try {
      step = apply_session(svc, cur.bank, cur.store, session, tau, outputs, GateMode::per_type);
    } catch (const GatewayError& e) {
      throw BuildAborted(fmt::format("{} session {}: {}; rerun to resume", dialogue.dialogue_id, tau, e.what()));
    }
    for (auto c : kComponents) {
      for (const auto& d : step.report.of(c).diagnostics) {
        spdlog::warn("{} session {} {} agent skipped: {}", dialogue.dialogue_id, tau, short_name(c), d);
      }
    }
    cur = {step.bank, step.store};
    const auto digest = bank_digest(cur.bank);

    ordered_json line;
    line["session"] = tau;
    line["date"] = session.timestamp.to_string();
    line["core_delta"] = step.core_delta;
    line["new_tokens"] = entry_counts_json(step.new_tokens);
    ordered_json valid;
    for (auto c : kComponents) valid[std::string(short_name(c))] = step.report.of(c).valid;
    line["valid"] = valid;
    line["compression"] = to_string(step.compression);
    line["digest"] = digest;
    trajectory.push_back(line.dump());

    save_snapshot(cur, paths.snapshot(tau));
    std::string traj_text;
    for (const auto& l : trajectory) traj_text += l + "\n";
    write_text_atomic(paths.trajectory(), traj_text);
    manifest.completed = tau;
    manifest.digests.push_back(digest);
    write_text_atomic(paths.manifest(), manifest.dump());
  }

  BuildResult result{cur.bank, cur.store, manifest.completed, manifest.completed == dialogue.sessions.size()};
  return result;
}

// -------------------------------------------------------------------- qa

std::optional<std::vector<QaPair>> parse_qa_pairs(std::string_view raw, std::size_t max_pairs) {
  const auto obj = extract_first_json_object(raw);
  if (!obj) return std::nullopt;
  auto it = obj->find("qa_pairs");
  if (it == obj->end() || !it->is_array()) return std::nullopt;
  std::vector<QaPair> out;
  for (const auto& item : *it) {
    if (out.size() == max_pairs) break;
    if (!item.is_object()) return std::nullopt;
    auto q = item.find("question");
    auto a = item.find("answer");
    auto t = item.find("qtype");
    if (q == item.end() || a == item.end() || t == item.end() || !q->is_string() || !t->is_string()) {
      return std::nullopt;
    }
    QaPair pair;
    pair.question = trim(q->get<std::string>());
    pair.answer = a->is_string() ? trim(a->get<std::string>()) : a->dump();
    const auto qtype = parse_qa_type(t->get<std::string>());
    if (pair.question.empty() || pair.answer.empty() || !qtype) return std::nullopt;
    pair.qtype = *qtype;
    out.push_back(std::move(pair));
  }
  if (out.empty()) return std::nullopt;
  return out;
}

namespace {

void require_complete_build(const DialoguePaths& paths, const Dialogue& dialogue) {
  if (!fs::exists(paths.manifest())) {
    throw std::runtime_error(dialogue.dialogue_id + ": no build found, run build first");
  }
  const auto m = Manifest::read(paths.manifest());
  if (m.completed != dialogue.sessions.size()) {
    throw std::runtime_error(fmt::format("{}: build covers {} of {} sessions", dialogue.dialogue_id,
                                         m.completed, dialogue.sessions.size()));
  }
}

}  // namespace

std::vector<SessionQa> generate_session_qa(const Dialogue& dialogue, const Services& svc) {
  const auto paths = dialogue_paths(svc.cfg, dialogue.dialogue_id);
  require_complete_build(paths, dialogue);
  std::vector<SessionQa> out;
  std::string lines;
  for (std::size_t tau = 1; tau <= dialogue.sessions.size(); ++tau) {
    const Session& session = dialogue.sessions[tau - 1];
    const auto prior = load_snapshot(paths.snapshot(tau - 1));
    const auto retrieved = prior.store.top_k(retrieval_query(session), svc.cfg.k_construct, std::nullopt, svc.embed_fn());
    const std::map<std::string, std::string> vars{
        {"count", std::to_string(svc.cfg.questions_per_session)},
        {"session_date", session.timestamp.to_string()},
        {"retrieved", format_retrieved(prior.bank, retrieved)},
        {"session", session.transcript()},
    };
    std::optional<std::vector<QaPair>> pairs;
    for (int attempt = 0; attempt < 2 && !pairs; ++attempt) {
      auto req = render(svc.prompts.qa_gen, vars, 0.0,
                        attempt == 0 ? std::nullopt : std::optional<std::int64_t>(svc.cfg.seed + 1));
      pairs = parse_qa_pairs(svc.qa_gen->chat(req), svc.cfg.questions_per_session);
    }
    if (!pairs) {
      spdlog::warn("{} session {}: question generation returned malformed JSON twice, skipped",
                   dialogue.dialogue_id, tau);
      continue;
    }
    SessionQa sq{tau, std::move(*pairs)};
    for (auto& p : sq.pairs) {
      p.question_date = session.timestamp.to_string();
      ordered_json j;
      j["session"] = tau;
      j["question"] = p.question;
      j["answer"] = p.answer;
      j["qtype"] = to_string(p.qtype);
      j["question_date"] = p.question_date;
      lines += j.dump() + "\n";
    }
    out.push_back(std::move(sq));
  }
  write_text_atomic(paths.qa(), lines);
  return out;
}

std::vector<SessionQa> load_session_qa(const fs::path& file) {
  std::vector<SessionQa> out;
  for (const auto& line : read_lines(file)) {
    const auto j = json::parse(line);
    const auto session = j.at("session").get<std::size_t>();
    if (out.empty() || out.back().session != session) out.push_back({session, {}});
    QaPair p;
    p.question = j.at("question").get<std::string>();
    p.answer = j.at("answer").get<std::string>();
    const auto qtype = parse_qa_type(j.at("qtype").get<std::string>());
    if (!qtype) throw std::runtime_error(file.string() + ": unknown qtype");
    p.qtype = *qtype;
    p.question_date = j.value("question_date", "");
    out.back().pairs.push_back(std::move(p));
  }
  return out;
}

// --------------------------------------------------------------- rollouts

std::vector<RolloutOutcome> rollout_and_reward(const Dialogue& dialogue, std::size_t session,
                                               const std::vector<QaPair>& qa, const Services& svc) {
  if (session == 0 || session > dialogue.sessions.size()) {
    throw std::out_of_range(fmt::format("session {} outside 1..{}", session, dialogue.sessions.size()));
  }
  const auto paths = dialogue_paths(svc.cfg, dialogue.dialogue_id);
  const auto prior = load_snapshot(paths.snapshot(session - 1));
  PerEntryType<std::optional<long>> expert{};
  for (const auto& step : load_trajectory(paths.trajectory())) {
    if (step.session != session) continue;
    for (auto t : kEntryTypes) expert[index_of(t)] = step.new_tokens[index_of(t)];
  }
  const Session& s = dialogue.sessions[session - 1];
  const RewardSettings settings{svc.cfg.penalty, svc.cfg.ell_aggregation};
  const auto answerer = svc.answerer();
  const auto judge = svc.judge_fn();

  std::vector<std::future<RolloutOutcome>> futures;
  for (std::size_t i = 0; i < svc.cfg.rollouts; ++i) {
    futures.push_back(std::async(std::launch::async, [&, i] {
      RolloutOutcome out;
      out.rollout = i;
      out.seed = svc.cfg.seed + static_cast<std::int64_t>(i);
      try {
        const auto outputs =
            run_agents(svc, prior.bank, prior.store, s, svc.cfg.rollout_temperature, out.seed, &out.diagnostics);
        auto step = apply_session(svc, prior.bank, prior.store, s, session, outputs, svc.cfg.gate_mode);
        for (auto c : kComponents) {
          for (const auto& d : step.report.of(c).diagnostics) {
            out.diagnostics.push_back(fmt::format("{}: {}", short_name(c), d));
          }
        }
        RolloutEvalInputs inputs{step.report.valid, step.core_delta, step.new_tokens, expert};
        out.record = evaluate_rollout(step.bank, step.store, qa, answerer, judge, inputs, settings);
        out.bank_digest = bank_digest(step.bank);
      } catch (const std::exception& e) {
        out.record = RewardRecord{};
        out.diagnostics.push_back(e.what());
      }
      out.weights = assign_weights(dominant_type(out.record.retrieval_counts), svc.cfg.adrpo.alpha,
                                   svc.cfg.weighting);
      return out;
    }));
  }
  std::vector<RolloutOutcome> outcomes;
  for (auto& f : futures) outcomes.push_back(f.get());

  std::vector<double> rewards;
  for (const auto& o : outcomes) rewards.push_back(o.record.reward);
  const auto adv = advantages(rewards, svc.cfg.adrpo.adv_eps);
  for (std::size_t i = 0; i < outcomes.size(); ++i) outcomes[i].advantage = adv[i];
  return outcomes;
}

void rollout_and_reward_all(const Dialogue& dialogue, const Services& svc) {
  const auto paths = dialogue_paths(svc.cfg, dialogue.dialogue_id);
  require_complete_build(paths, dialogue);
  if (!fs::exists(paths.qa())) throw std::runtime_error(dialogue.dialogue_id + ": no qa.jsonl, run gen-qa first");
  std::string lines;
  for (const auto& sq : load_session_qa(paths.qa())) {
    if (sq.pairs.empty()) continue;
    for (const auto& o : rollout_and_reward(dialogue, sq.session, sq.pairs, svc)) {
      ordered_json j;
      j["dialogue_id"] = dialogue.dialogue_id;
      j["session"] = sq.session;
      j["rollout"] = o.rollout;
      j["seed"] = o.seed;
      const auto record = o.record.to_json();
      for (const auto& [k, v] : record.items()) j[k] = v;
      j["weights"] = o.weights.to_json();
      j["advantage"] = o.advantage;
      j["bank_digest"] = o.bank_digest;
      j["diagnostics"] = o.diagnostics;
      lines += j.dump() + "\n";
    }
  }
  write_text_atomic(paths.rewards(), lines);
}

// ------------------------------------------------------------- evaluation

void EvalReport::add(const std::string& category, bool correct) {
  auto& c = by_category[category.empty() ? "uncategorized" : category];
  ++c.total;
  ++overall.total;
  if (correct) {
    ++c.correct;
    ++overall.correct;
  }
}

std::string EvalReport::to_csv() const {
  std::string out = "category,correct,total,accuracy\n";
  auto row = [&](const std::string& name, const CategoryScore& s) {
    std::string cell = name;
    if (cell.find_first_of(",\"\n") != std::string::npos) {
      std::string q = "\"";
      for (char ch : cell) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      cell = q + "\"";
    }
    out += fmt::format("{},{},{},{:.2f}\n", cell, s.correct, s.total, s.accuracy());
  };
  for (const auto& [name, s] : by_category) row(name, s);
  row("overall", overall);
  return out;
}

std::string EvalReport::to_table() const {
  std::size_t width = 8;
  for (const auto& [name, s] : by_category) width = std::max(width, name.size());
  std::string out = fmt::format("{:<{}}  {:>7}  {:>5}  {:>8}\n", "category", width, "correct", "total", "accuracy");
  auto row = [&](const std::string& name, const CategoryScore& s) {
    out += fmt::format("{:<{}}  {:>7}  {:>5}  {:>7.2f}%\n", name, width, s.correct, s.total, s.accuracy());
  };
  for (const auto& [name, s] : by_category) row(name, s);
  row("overall", overall);
  if (failures) out += fmt::format("({} questions failed and were scored incorrect)\n", failures);
  return out;
}

EvalReport evaluate(const std::vector<Dialogue>& dialogues, const Services& svc) {
  EvalReport report;
  const auto answerer = svc.answerer();
  const auto judge = svc.judge_fn();
  for (const auto& d : dialogues) {
    const auto paths = dialogue_paths(svc.cfg, d.dialogue_id);
    std::optional<Snapshot> snap;
    try {
      require_complete_build(paths, d);
      snap = load_snapshot(paths.snapshot(d.sessions.size()));
    } catch (const std::exception& e) {
      spdlog::warn("{}: {}; its questions count as incorrect", d.dialogue_id, e.what());
    }
    for (const auto& q : d.questions) {
      bool correct = false;
      if (snap) {
        try {
          const auto ans = answer_question(answerer, snap->bank, snap->store, q.question, q.question_date.to_string());
          correct = judge(QaPair{q.question, q.gold_answer, QaType::single_session, q.question_date.to_string()}, ans.text);
        } catch (const std::exception& e) {
          spdlog::warn("{}: question '{}' failed: {}", d.dialogue_id, utf8_truncate(q.question, 60), e.what());
          ++report.failures;
        }
      } else {
        ++report.failures;
      }
      report.add(q.category, correct);
    }
  }
  return report;
}

}  // namespace memcraft
