#pragma once

// Shared fixtures for the test binaries.

#include <atomic>
#include <filesystem>
#include <functional>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "planforge/analysis.hpp"
#include "planforge/assets.hpp"
#include "planforge/backend.hpp"
#include "planforge/domain.hpp"
#include "planforge/optimization.hpp"

namespace planforge::support {

using Responder = std::function<std::string(const AgentConfig&, std::span<const ChatMessage>)>;

class FunctionBackend final : public Backend {
 public:
  explicit FunctionBackend(Responder fn) : fn_(std::move(fn)) {}

  std::size_t calls() const { return calls_.load(); }

 protected:
  std::string do_complete(const AgentConfig& config,
                          std::span<const ChatMessage> messages) override {
    ++calls_;
    return fn_(config, messages);
  }

 private:
  Responder fn_;
  std::atomic<std::size_t> calls_{0};
};

inline std::string plan_text(int level, int examples = 2) {
  std::string out = fmt::format(
      "KNOWLEDGE:\nA linear equation keeps its solutions when the same operation is applied to "
      "both sides. [level={}]\n",
      level);
  for (int i = 1; i <= examples; ++i) {
    out += fmt::format("EXAMPLE {}:\nSolve {}x + {} = {}.\nSOLUTION:\nSubtract {} and divide by {}.\n",
                       i, i + 1, i, 3 * i + 2, i, i + 1);
  }
  return out;
}

inline int max_level(std::string_view text) {
  static const std::regex marker(R"(\[level=(\d+)\])");
  int best = -1;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), marker); it != std::sregex_iterator();
       ++it) {
    best = std::max(best, std::stoi((*it)[1]));
  }
  return best;
}

/// Monotone oracle: a plan tagged [level=L] scores 60 + 5L on every question,
/// and the optimizer always answers with one level above the best plan it sees.
inline std::string oracle_response(const AgentConfig& config, std::span<const ChatMessage> messages) {
  const auto& last = messages.back().content;
  switch (config.role) {
    case AgentRole::Optimizer: return plan_text(max_level(last) + 1);
    case AgentRole::Analyst: return "EXPLANATION: Students may drop the sign when moving terms.";
    case AgentRole::Judge:
      return "[A]: 80; clear\n[B]: 75; complete\n[C]: 70; deep\n[D]: 65; practical\n[E]: 60; targeted";
    case AgentRole::Evaluator: {
      const int level = max_level(last);
      if (level < 0) return "ADVANTAGE: Clear steps.\nDISADVANTAGE: Few word problems.";
      return fmt::format("SCORE: {}\nADVANTAGE: Clear steps.\nDISADVANTAGE: Few word problems.",
                         60 + 5 * level);
    }
  }
  return {};
}

inline SkillTree default_tree() {
  return skill_tree_from_json(nlohmann::json::parse(bundled_asset("data/default_skill_tree.json")));
}

inline LessonPlan leveled_plan(int level, std::string id = "plan-r0") {
  auto body = parse_plan_text(plan_text(level));
  LessonPlan plan;
  plan.id = std::move(id);
  plan.topic = "algebraic equations";
  plan.knowledge_explanation = body.knowledge_explanation;
  plan.examples = body.examples;
  return plan;
}

inline std::vector<TestQuestion> make_questions(std::size_t n) {
  std::vector<TestQuestion> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({fmt::format("q{}", i), fmt::format("Solve x + {} = {}.", i, 2 * i + 1),
                   std::to_string(i + 1), QuestionSource::Custom});
  }
  return out;
}

/// Script whose fallbacks answer every role with a well-formed reply.
inline Script fallback_script() {
  Script script;
  script.set_fallbacks(AgentRole::Optimizer, {plan_text(1), plan_text(2, 1), plan_text(3, 3)});
  script.set_fallbacks(AgentRole::Evaluator,
                       {"SCORE: 72\nADVANTAGE: Clear steps.\nDISADVANTAGE: Few word problems.",
                        "SCORE: 81\nADVANTAGE: Good pacing.\nDISADVANTAGE: No checking step.",
                        "SCORE: 64\nADVANTAGE: Concrete examples.\nDISADVANTAGE: Too abstract."});
  script.set_fallbacks(AgentRole::Analyst,
                       {"EXPLANATION: Students may drop the sign when moving terms."});
  script.set_fallbacks(AgentRole::Judge,
                       {"[A]: 84.1; clear\n[B]: 87.5; complete\n[C]: 88.9; deep\n"
                        "[D]: 87.8; practical\n[E]: 83.7; targeted"});
  return script;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            fmt::format("planforge-test-{:016x}", (std::uint64_t{rd()} << 32) | rd());
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(std::string_view name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace planforge::support
