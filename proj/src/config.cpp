#include "planforge/config.hpp"

#include <set>

#include <fmt/format.h>

#include "planforge/error.hpp"

namespace planforge {

using nlohmann::json;

void validate(const OptimizeConfig& c) {
  auto require = [](bool ok, std::string_view what) {
    if (!ok) throw Error(ErrorKind::InvalidValue, std::string(what));
  };
  require(c.rounds >= 0, "rounds must be >= 0");
  require(c.branching >= 1, "branching must be >= 1");
  require(c.capacity >= 1, "capacity must be >= 1");
  require(c.questions_per_eval >= 1, "questions_per_eval must be >= 1");
}

void validate(const RunConfig& config) {
  validate(config.optimize);
  if (config.topic.empty()) throw Error(ErrorKind::EmptyTopic, "run topic is empty");
  for (const auto* agent : {&config.evaluator, &config.optimizer, &config.analyst, &config.judge}) {
    validate(*agent);
  }
}

json to_json(const RunConfig& config) {
  return json{{"rounds", config.optimize.rounds},
              {"branching", config.optimize.branching},
              {"capacity", config.optimize.capacity},
              {"questions_per_eval", config.optimize.questions_per_eval},
              {"seed", config.optimize.seed},
              {"topic", config.topic},
              {"weak_threshold", config.weak_threshold},
              {"agents",
               {{"evaluator", config.evaluator},
                {"optimizer", config.optimizer},
                {"analyst", config.analyst},
                {"judge", config.judge}}}};
}

RunConfig run_config_from_json(const json& j, RunConfig base) {
  if (!j.is_object()) throw Error(ErrorKind::ParseError, "config must be a JSON object");
  static const std::set<std::string> kKnown = {
      "rounds", "branching", "capacity", "questions_per_eval", "seed", "topic", "weak_threshold",
      "agents", "corpus", "format", "parallelism"};
  for (const auto& [key, value] : j.items()) {
    if (!kKnown.contains(key)) {
      throw Error(ErrorKind::ParseError, fmt::format("unknown config field '{}'", key));
    }
  }
  try {
    auto& o = base.optimize;
    o.rounds = j.value("rounds", o.rounds);
    o.branching = j.value("branching", o.branching);
    o.capacity = j.value("capacity", o.capacity);
    o.questions_per_eval = j.value("questions_per_eval", o.questions_per_eval);
    o.seed = j.value("seed", o.seed);
    base.topic = j.value("topic", base.topic);
    base.weak_threshold = j.value("weak_threshold", base.weak_threshold);
    if (j.contains("agents")) {
      const auto& agents = j.at("agents");
      auto overlay = [&](const char* name, AgentRole role, AgentConfig& target) {
        if (!agents.contains(name)) return;
        auto merged = json(target);
        merged.update(agents.at(name));
        target = agent_config_from_json(merged, role);
      };
      overlay("evaluator", AgentRole::Evaluator, base.evaluator);
      overlay("optimizer", AgentRole::Optimizer, base.optimizer);
      overlay("analyst", AgentRole::Analyst, base.analyst);
      overlay("judge", AgentRole::Judge, base.judge);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, fmt::format("malformed config: {}", e.what()));
  }
  validate(base);
  return base;
}

}  // namespace planforge
