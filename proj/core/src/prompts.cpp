#include "memcraft/prompts.hpp"

#include <fstream>
#include <sstream>

namespace memcraft {

namespace {

constexpr std::string_view kSystemMarker = "### SYSTEM";
constexpr std::string_view kUserMarker = "### USER";

std::string strip_newlines(std::string_view s) {
  while (!s.empty() && (s.front() == '\n' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

PromptTemplate PromptTemplate::parse(std::string_view text) {
  const auto sys = text.find(kSystemMarker);
  const auto usr = text.find(kUserMarker);
  if (sys == std::string_view::npos || usr == std::string_view::npos || usr < sys) {
    throw PromptError("prompt file needs a ### SYSTEM section followed by ### USER");
  }
  const auto sys_body = sys + kSystemMarker.size();
  return {strip_newlines(text.substr(sys_body, usr - sys_body)),
          strip_newlines(text.substr(usr + kUserMarker.size()))};
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw PromptError("cannot read prompt file " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const PromptError& e) {
    throw PromptError(file.string() + ": " + e.what());
  }
}

std::string PromptTemplate::render(std::string_view tmpl,
                                   const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(tmpl.substr(pos, open - pos));
    const std::string key = trim(tmpl.substr(open + 2, close - open - 2));
    auto it = vars.find(key);
    if (it == vars.end()) throw PromptError("no value for placeholder {{" + key + "}}");
    out += it->second;
    pos = close + 2;
  }
  out.append(tmpl.substr(pos));
  return out;
}

PromptSet PromptSet::load(const std::filesystem::path& dir) {
  PromptSet set;
  set.agents[index_of(Component::core)] = PromptTemplate::load(dir / "core_agent.txt");
  set.agents[index_of(Component::episodic)] = PromptTemplate::load(dir / "episodic_agent.txt");
  set.agents[index_of(Component::semantic)] = PromptTemplate::load(dir / "semantic_agent.txt");
  set.agents[index_of(Component::procedural)] = PromptTemplate::load(dir / "procedural_agent.txt");
  set.compress = PromptTemplate::load(dir / "compress.txt");
  set.compress_aggressive = PromptTemplate::load(dir / "compress_aggressive.txt");
  set.answer = PromptTemplate::load(dir / "answer.txt");
  set.judge = PromptTemplate::load(dir / "judge.txt");
  set.qa_gen = PromptTemplate::load(dir / "qa_gen.txt");
  return set;
}

}  // namespace memcraft
