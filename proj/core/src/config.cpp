#include "memcraft/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace memcraft {

namespace {

template <class T>
T parse_integer(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

std::vector<double> parse_real_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_real(key, trim(item)));
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value,
                                  const std::filesystem::path& base)>;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
  std::filesystem::path p(v);
  return p.is_absolute() || base.empty() ? p : base / p;
}

void add_gateway_keys(std::map<std::string, Setter>& table, const std::string& section,
                      GatewayConfig RunConfig::*member) {
  auto gw = [member](RunConfig& c) -> GatewayConfig& { return c.*member; };
  table[section + ".backend"] = [gw](RunConfig& c, const std::string& k, const std::string& v, auto&) {
    auto b = parse_backend(v);
    if (!b) throw ConfigError(k + ": unknown backend '" + v + "' (http, mock_scripted, mock_hash)");
    gw(c).backend = *b;
  };
  table[section + ".base_url"] = [gw](RunConfig& c, auto&, const std::string& v, auto&) { gw(c).base_url = v; };
  table[section + ".model"] = [gw](RunConfig& c, auto&, const std::string& v, auto&) { gw(c).model_name = v; };
  table[section + ".api_key_env"] = [gw](RunConfig& c, auto&, const std::string& v, auto&) {
    gw(c).api_key_env_var = v;
  };
  table[section + ".timeout_ms"] = [gw](RunConfig& c, const std::string& k, const std::string& v, auto&) {
    gw(c).timeout_ms = parse_integer<int>(k, v);
  };
  table[section + ".max_retries"] = [gw](RunConfig& c, const std::string& k, const std::string& v, auto&) {
    gw(c).max_retries = parse_integer<int>(k, v);
  };
  table[section + ".backoff_base_ms"] = [gw](RunConfig& c, const std::string& k, const std::string& v, auto&) {
    gw(c).backoff_base_ms = parse_integer<int>(k, v);
  };
  table[section + ".max_in_flight"] = [gw](RunConfig& c, const std::string& k, const std::string& v, auto&) {
    gw(c).max_in_flight = parse_integer<int>(k, v);
  };
  table[section + ".embed_dim"] = [gw](RunConfig& c, const std::string& k, const std::string& v, auto&) {
    gw(c).embed_dim = parse_integer<std::size_t>(k, v);
  };
  table[section + ".hash_seed"] = [gw](RunConfig& c, const std::string& k, const std::string& v, auto&) {
    gw(c).hash_seed = parse_integer<std::uint64_t>(k, v);
  };
  table[section + ".script"] = [gw](RunConfig& c, auto&, const std::string& v,
                                    const std::filesystem::path& base) { gw(c).script_path = resolve(base, v); };
}

#define REAL(field) [](RunConfig& c, const std::string& k, const std::string& v, auto&) { c.field = parse_real(k, v); }
#define SIZE(field) \
  [](RunConfig& c, const std::string& k, const std::string& v, auto&) { c.field = parse_integer<std::size_t>(k, v); }
#define LONG(field) [](RunConfig& c, const std::string& k, const std::string& v, auto&) { c.field = parse_integer<long>(k, v); }

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    add_gateway_keys(t, "agent", &RunConfig::agent);
    add_gateway_keys(t, "answer", &RunConfig::answer);
    add_gateway_keys(t, "judge", &RunConfig::judge);
    add_gateway_keys(t, "qa_gen", &RunConfig::qa_gen);
    add_gateway_keys(t, "embed", &RunConfig::embed);
    t["judge.mode"] = [](RunConfig& c, const std::string& k, const std::string& v, auto&) {
      if (v == "llm") c.judge_mode = JudgeMode::llm;
      else if (v == "lexical") c.judge_mode = JudgeMode::lexical;
      else throw ConfigError(k + ": expected llm or lexical");
    };

    t["run.seed"] = [](RunConfig& c, const std::string& k, const std::string& v, auto&) {
      c.seed = parse_integer<std::int64_t>(k, v);
    };
    t["run.k_construct"] = SIZE(k_construct);
    t["run.k_answer"] = SIZE(k_answer);
    t["run.questions_per_session"] = SIZE(questions_per_session);
    t["run.rollouts"] = SIZE(rollouts);
    t["run.rollout_temperature"] = REAL(rollout_temperature);
    t["run.resolve_threshold"] = REAL(resolve_threshold);
    t["run.core_capacity_chars"] = SIZE(core_capacity_chars);
    t["run.gate_mode"] = [](RunConfig& c, const std::string& k, const std::string& v, auto&) {
      if (v == "per_rollout") c.gate_mode = GateMode::per_rollout;
      else if (v == "per_type") c.gate_mode = GateMode::per_type;
      else throw ConfigError(k + ": expected per_rollout or per_type");
    };
    t["run.ell_aggregation"] = [](RunConfig& c, const std::string& k, const std::string& v, auto&) {
      if (v == "mean") c.ell_aggregation = EllAggregation::mean;
      else if (v == "max") c.ell_aggregation = EllAggregation::max;
      else throw ConfigError(k + ": expected mean or max");
    };
    t["run.weighting"] = [](RunConfig& c, const std::string& k, const std::string& v, auto&) {
      if (v == "contribution") c.weighting = WeightingMode::contribution;
      else if (v == "unweighted") c.weighting = WeightingMode::unweighted;
      else throw ConfigError(k + ": expected contribution or unweighted");
    };

    t["penalty.lambda"] = REAL(penalty.lambda);
    t["penalty.theta_min"] = LONG(penalty.theta_min);
    t["penalty.theta_max"] = LONG(penalty.theta_max);
    t["penalty.delta_min"] = LONG(penalty.delta_min);
    t["penalty.gamma_l"] = REAL(penalty.gamma_l);
    t["penalty.gamma_u"] = REAL(penalty.gamma_u);
    t["penalty.gamma_min"] = REAL(penalty.gamma_min);
    t["penalty.gamma_max"] = REAL(penalty.gamma_max);

    t["adrpo.clip_eps"] = REAL(adrpo.clip_eps);
    t["adrpo.kl_beta"] = REAL(adrpo.kl_beta);
    t["adrpo.adv_eps"] = REAL(adrpo.adv_eps);
    t["adrpo.alpha"] = REAL(adrpo.alpha);
    t["adrpo.ratio_baseline"] = [](RunConfig& c, const std::string& k, const std::string& v, auto&) {
      if (v == "reference") c.adrpo.ratio_baseline = RatioBaseline::reference;
      else if (v == "old_policy") c.adrpo.ratio_baseline = RatioBaseline::old_policy;
      else throw ConfigError(k + ": expected reference or old_policy");
    };

    t["toy.environment"] = [](RunConfig& c, const std::string& k, const std::string& v, auto&) {
      if (v != "bandit" && v != "attribution") throw ConfigError(k + ": expected bandit or attribution");
      c.toy.environment = v;
    };
    t["toy.epochs"] = SIZE(toy.train.epochs);
    t["toy.sessions_per_epoch"] = SIZE(toy.train.sessions_per_epoch);
    t["toy.group_size"] = SIZE(toy.train.group_size);
    t["toy.updates_per_batch"] = SIZE(toy.train.updates_per_batch);
    t["toy.learning_rate"] = REAL(toy.train.learning_rate);
    t["toy.reward_density"] = REAL(toy.train.reward_density);
    t["toy.initial_logits"] = [](RunConfig& c, const std::string& k, const std::string& v, auto&) {
      c.toy.train.initial_token_logits = parse_real_list(k, v);
    };

    t["paths.prompts"] = [](RunConfig& c, auto&, const std::string& v, const std::filesystem::path& base) {
      c.prompts_dir = resolve(base, v);
    };
    t["paths.work_dir"] = [](RunConfig& c, auto&, const std::string& v, const std::filesystem::path& base) {
      c.work_dir = resolve(base, v);
    };
    t["mock.script"] = [](RunConfig& c, auto&, const std::string& v, const std::filesystem::path& base) {
      c.mock_script = resolve(base, v);
    };
    return t;
  }();
  return table;
}

#undef REAL
#undef SIZE
#undef LONG

}  // namespace

void RunConfig::validate() const {
  if (k_construct == 0 || k_answer == 0) throw ConfigError("k_construct and k_answer must be positive");
  if (questions_per_session == 0) throw ConfigError("questions_per_session must be positive");
  if (rollouts < 2) throw ConfigError("rollouts must be at least 2 to normalize advantages");
  if (core_capacity_chars == 0) throw ConfigError("core_capacity_chars must be positive");
  if (!(resolve_threshold > -1.0 && resolve_threshold <= 1.0)) {
    throw ConfigError("resolve_threshold must lie in (-1, 1]");
  }
  if (rollout_temperature < 0.0) throw ConfigError("rollout_temperature must be non-negative");
  try {
    penalty.validate();
    adrpo.validate();
    for (const auto* gw : {&agent, &answer, &judge, &qa_gen, &embed}) gw->validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (weighting == WeightingMode::contribution && !(adrpo.alpha > 1.0)) {
    throw ConfigError("adrpo.alpha must exceed 1 (set run.weighting = unweighted for plain GRPO)");
  }
}

RunConfig parse_config(const std::string& ini_text, const std::filesystem::path& base_dir) {
  boost::property_tree::ptree tree;
  std::istringstream in(ini_text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  RunConfig cfg;
  const auto& table = setters();
  for (const auto& [section, keys] : tree) {
    if (keys.empty()) throw ConfigError("key '" + section + "' must live in a section");
    for (const auto& [key, value] : keys) {
      const std::string full = section + "." + key;
      auto it = table.find(full);
      if (it == table.end()) throw ConfigError("unknown config key '" + full + "'");
      it->second(cfg, full, trim(value.data()), base_dir);
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), file.parent_path());
}

void apply_mock(RunConfig& cfg) {
  if (cfg.mock_script.empty()) throw ConfigError("--mock needs [mock] script in the config");
  for (auto* gw : {&cfg.agent, &cfg.qa_gen}) {
    gw->backend = Backend::mock_scripted;
    gw->script_path = cfg.mock_script;
    gw->embed_dim = cfg.embed.embed_dim;
    gw->hash_seed = cfg.embed.hash_seed;
  }
  for (auto* gw : {&cfg.answer, &cfg.judge, &cfg.embed}) {
    gw->backend = Backend::mock_hash;
    gw->embed_dim = cfg.embed.embed_dim;
    gw->hash_seed = cfg.embed.hash_seed;
  }
  cfg.judge_mode = JudgeMode::lexical;
}

}  // namespace memcraft
