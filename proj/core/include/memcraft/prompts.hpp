#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "memcraft/types.hpp"

namespace memcraft {

class PromptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A system/user prompt pair with {{name}} placeholders. Files hold a
// "### SYSTEM" section followed by a "### USER" section.
struct PromptTemplate {
  std::string system;
  std::string user;

  static PromptTemplate parse(std::string_view text);
  static PromptTemplate load(const std::filesystem::path& file);

  // Substitutes every placeholder; a placeholder without a value throws.
  static std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars);
};

struct PromptSet {
  PerComponent<PromptTemplate> agents;  // core, episodic, semantic, procedural
  PromptTemplate compress;
  PromptTemplate compress_aggressive;
  PromptTemplate answer;
  PromptTemplate judge;
  PromptTemplate qa_gen;

  const PromptTemplate& agent(Component c) const { return agents[index_of(c)]; }

  // Expects core_agent.txt, episodic_agent.txt, semantic_agent.txt,
  // procedural_agent.txt, compress.txt, compress_aggressive.txt, answer.txt,
  // judge.txt and qa_gen.txt in `dir`.
  static PromptSet load(const std::filesystem::path& dir);
};

}  // namespace memcraft
