#include <gtest/gtest.h>

#include "memcraft/prompts.hpp"

using namespace memcraft;

TEST(PromptTemplateTest, ParseSections) {
  const auto t = PromptTemplate::parse("### SYSTEM\nBe brief.\n\n### USER\nQ: {{question}}\n");
  EXPECT_EQ(t.system, "Be brief.");
  EXPECT_EQ(t.user, "Q: {{question}}");
  EXPECT_THROW(PromptTemplate::parse("### USER\nx\n### SYSTEM\ny"), PromptError);
  EXPECT_THROW(PromptTemplate::parse("no markers"), PromptError);
}

TEST(PromptTemplateTest, Render) {
  EXPECT_EQ(PromptTemplate::render("{{a}}-{{ b }}-{{a}}", {{"a", "1"}, {"b", "{{a}}"}}), "1-{{a}}-1");
  EXPECT_EQ(PromptTemplate::render("no vars", {}), "no vars");
  EXPECT_EQ(PromptTemplate::render("open {{ only", {}), "open {{ only");
  EXPECT_THROW(PromptTemplate::render("{{missing}}", {{"other", "x"}}), PromptError);
}

TEST(PromptSetTest, ShippedPromptsLoadAndRender) {
  const auto set = PromptSet::load(MEMCRAFT_PROMPTS_DIR);
  const std::map<std::string, std::string> agent_vars{
      {"core", "c"}, {"retrieved", "r"}, {"session", "s"}, {"session_date", "2024-01-01"}, {"capacity", "5000"}};
  for (auto c : kComponents) {
    EXPECT_FALSE(set.agent(c).system.empty());
    EXPECT_NO_THROW(PromptTemplate::render(set.agent(c).user, agent_vars));
    EXPECT_NO_THROW(PromptTemplate::render(set.agent(c).system, agent_vars));
  }
  EXPECT_NE(set.agent(Component::episodic).system.find("Episodic"), std::string::npos);
  EXPECT_NE(set.answer.user.find("{{context}}"), std::string::npos);
  EXPECT_NE(set.judge.user.find("{{gold}}"), std::string::npos);
  EXPECT_THROW(PromptSet::load("/nonexistent/prompts"), PromptError);
}
