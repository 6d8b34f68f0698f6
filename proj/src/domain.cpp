#include "planforge/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "planforge/error.hpp"
#include "planforge/util.hpp"

namespace planforge {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorKind::InvalidValue, message);
}

template <typename Fn>
auto decoding(std::string_view what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, fmt::format("malformed {}: {}", what, e.what()));
  }
}

}  // namespace

const std::array<std::array<std::string_view, kSubNodeCount>, kAbilityCount>&
default_sub_node_labels() {
  static const std::array<std::array<std::string_view, kSubNodeCount>, kAbilityCount> labels = {{
      {"Integer arithmetic", "Fraction and decimal operations", "Order of operations",
       "Mental estimation", "Calculation accuracy"},
      {"Symbol manipulation", "Variable representation", "Generalization from examples",
       "Function concepts", "Structural understanding"},
      {"Step-by-step deduction", "Equation balancing", "Justification of steps", "Case analysis",
       "Checking results"},
      {"Pattern recognition", "Transfer to new problems", "Translating word problems",
       "Connecting representations", "Analogical modeling"},
      {"Graph interpretation", "Number line reasoning", "Geometric modeling",
       "Visualizing quantities", "Coordinate reasoning"},
  }};
  return labels;
}

SubNode::SubNode(std::string label, int level) : label_(std::move(label)), level_(level) {
  if (level < kMinLevel || level > kMaxLevel) {
    throw Error(ErrorKind::LevelOutOfRange,
                fmt::format("sub-node '{}' has level {}, expected {}..{}", label_, level,
                            kMinLevel, kMaxLevel));
  }
  if (trim(label_).empty()) invalid("sub-node label is empty");
}

SkillTree::SkillTree(std::string topic, std::vector<AbilityNode> abilities)
    : topic_(std::move(topic)), abilities_(std::move(abilities)) {
  if (trim(topic_).empty()) throw Error(ErrorKind::EmptyTopic, "skill tree topic is empty");
  if (abilities_.size() != kAbilityCount) {
    throw Error(ErrorKind::ShapeError,
                fmt::format("expected {} abilities, got {}", kAbilityCount, abilities_.size()));
  }
  for (std::size_t i = 0; i < kAbilityCount; ++i) {
    const auto& node = abilities_[i];
    if (node.name != kAbilityNames[i]) {
      invalid(fmt::format("ability {} must be '{}', got '{}'", i, kAbilityNames[i], node.name));
    }
    if (node.sub_nodes.size() != kSubNodeCount) {
      throw Error(ErrorKind::ShapeError,
                  fmt::format("ability '{}' has {} sub-nodes, expected {}", node.name,
                              node.sub_nodes.size(), kSubNodeCount));
    }
  }
}

SkillTree build_skill_tree(std::string topic, const LevelMatrix& levels) {
  if (trim(topic).empty()) throw Error(ErrorKind::EmptyTopic, "skill tree topic is empty");
  if (levels.size() != kAbilityCount ||
      std::any_of(levels.begin(), levels.end(),
                  [](const auto& row) { return row.size() != kSubNodeCount; })) {
    throw Error(ErrorKind::ShapeError, "level matrix must be 5x5");
  }
  const auto& labels = default_sub_node_labels();
  std::vector<AbilityNode> abilities;
  abilities.reserve(kAbilityCount);
  for (std::size_t i = 0; i < kAbilityCount; ++i) {
    AbilityNode node{std::string(kAbilityNames[i]), {}};
    node.sub_nodes.reserve(kSubNodeCount);
    for (std::size_t j = 0; j < kSubNodeCount; ++j) {
      node.sub_nodes.emplace_back(std::string(labels[i][j]), levels[i][j]);
    }
    abilities.push_back(std::move(node));
  }
  return SkillTree(std::move(topic), std::move(abilities));
}

double primary_score(const SkillTree& tree, std::size_t ability_index) {
  if (ability_index >= kAbilityCount) {
    throw Error(ErrorKind::IndexOutOfRange,
                fmt::format("ability index {} out of range 0..{}", ability_index,
                            kAbilityCount - 1));
  }
  const auto& subs = tree.abilities()[ability_index].sub_nodes;
  const int total = std::accumulate(subs.begin(), subs.end(), 0,
                                    [](int acc, const SubNode& s) { return acc + s.level(); });
  return static_cast<double>(total) / static_cast<double>(subs.size());
}

std::string render_skill_tree_fragment(const SkillTree& tree) {
  std::string out = fmt::format("Teaching topic: {}\n", tree.topic());
  out += "Ability levels of the student group (1 = weakest, 5 = strongest):\n";
  for (std::size_t i = 0; i < kAbilityCount; ++i) {
    const auto& node = tree.abilities()[i];
    out += fmt::format("{}: {:.1f}/5\n", node.name, primary_score(tree, i));
    for (const auto& sub : node.sub_nodes) {
      out += fmt::format("  - {}: {}/5\n", sub.label(), sub.level());
    }
  }
  return out;
}

void validate(const LessonPlan& plan) {
  if (trim(plan.id).empty()) invalid("lesson plan id is empty");
  if (trim(plan.knowledge_explanation).empty()) {
    invalid(fmt::format("lesson plan '{}' has an empty knowledge explanation", plan.id));
  }
  if (plan.round < 0) invalid(fmt::format("lesson plan '{}' has a negative round", plan.id));
  if ((plan.round == 0) != !plan.parent_id.has_value()) {
    invalid(fmt::format("lesson plan '{}': round 0 must be exactly the plans without a parent",
                        plan.id));
  }
  for (const auto& example : plan.examples) {
    for (const auto& point : example.error_points) {
      if (!(point.probability >= 0.01 && point.probability <= 0.99)) {
        invalid(fmt::format("error point '{}' probability {} outside [0.01, 0.99]",
                            point.mistake_id, point.probability));
      }
      if (trim(point.explanation).empty()) {
        invalid(fmt::format("error point '{}' has no explanation", point.mistake_id));
      }
    }
  }
}

std::string render_plan_text(const LessonPlan& plan) {
  std::string out = "KNOWLEDGE:\n";
  out += trim(plan.knowledge_explanation);
  out += '\n';
  for (std::size_t i = 0; i < plan.examples.size(); ++i) {
    const auto& example = plan.examples[i];
    out += fmt::format("EXAMPLE {}:\n{}\nSOLUTION:\n{}\n", i + 1, trim(example.statement),
                       trim(example.worked_solution));
    if (!example.error_points.empty()) {
      out += "ERROR-PRONE POINTS:\n";
      for (const auto& point : example.error_points) {
        out += fmt::format("- ({:.2f}) {}: {}\n", point.probability, point.description,
                           trim(point.explanation));
      }
    }
  }
  return out;
}

namespace {

enum class Header { None, Knowledge, Example, Solution, ErrorPoints };

// Recognizes a header line, tolerating markdown emphasis around it. Returns
// the header and any inline text following its colon.
std::pair<Header, std::string_view> classify_line(std::string_view raw) {
  auto line = trim(raw);
  while (!line.empty() && (line.front() == '*' || line.front() == '#')) line.remove_prefix(1);
  line = trim(line);
  auto rest_after = [&](std::size_t colon) {
    auto rest = line.substr(colon + 1);
    while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
    return trim(rest);
  };
  auto starts = [&](std::string_view word) { return line.substr(0, word.size()) == word; };
  if (starts("KNOWLEDGE")) {
    const auto colon = line.find(':');
    if (colon != std::string_view::npos && trim(line.substr(9, colon - 9)).find_first_not_of('*') ==
                                               std::string_view::npos) {
      return {Header::Knowledge, rest_after(colon)};
    }
  } else if (starts("EXAMPLE")) {
    const auto colon = line.find(':');
    if (colon != std::string_view::npos) {
      const auto between = trim(line.substr(7, colon - 7));
      const bool numeric = std::all_of(between.begin(), between.end(), [](char c) {
        return (c >= '0' && c <= '9') || c == '*';
      });
      if (numeric) return {Header::Example, rest_after(colon)};
    }
  } else if (starts("SOLUTION")) {
    const auto colon = line.find(':');
    if (colon != std::string_view::npos &&
        trim(line.substr(8, colon - 8)).find_first_not_of('*') == std::string_view::npos) {
      return {Header::Solution, rest_after(colon)};
    }
  } else if (starts("ERROR-PRONE POINTS")) {
    return {Header::ErrorPoints, {}};
  }
  return {Header::None, {}};
}

void append_line(std::string& buffer, std::string_view line) {
  if (!buffer.empty()) buffer += '\n';
  buffer += line;
}

[[noreturn]] void plan_error(const std::string& message) {
  throw Error(ErrorKind::PlanParseError, message);
}

}  // namespace

PlanBody parse_plan_text(std::string_view text) {
  enum class State { Preamble, Knowledge, Statement, Solution, Skip };
  State state = State::Preamble;
  bool seen_knowledge = false;
  std::string knowledge;
  std::vector<ExampleItem> examples;
  bool current_has_solution = false;

  auto close_example = [&] {
    if (examples.empty()) return;
    auto& last = examples.back();
    if (!current_has_solution) {
      plan_error(fmt::format("example {} has no SOLUTION section", examples.size()));
    }
    last.statement = std::string(trim(last.statement));
    last.worked_solution = std::string(trim(last.worked_solution));
    if (last.statement.empty()) plan_error(fmt::format("example {} is empty", examples.size()));
    if (last.worked_solution.empty()) {
      plan_error(fmt::format("example {} has an empty solution", examples.size()));
    }
  };

  for (const auto line : split_lines(text)) {
    const auto [header, inline_text] = classify_line(line);
    switch (header) {
      case Header::Knowledge:
        if (seen_knowledge) plan_error("more than one KNOWLEDGE section");
        seen_knowledge = true;
        state = State::Knowledge;
        if (!inline_text.empty()) append_line(knowledge, inline_text);
        continue;
      case Header::Example:
        if (!seen_knowledge) plan_error("EXAMPLE before the KNOWLEDGE section");
        close_example();
        examples.emplace_back();
        current_has_solution = false;
        state = State::Statement;
        if (!inline_text.empty()) append_line(examples.back().statement, inline_text);
        continue;
      case Header::Solution:
        if (examples.empty() || state != State::Statement) {
          plan_error("SOLUTION without a preceding EXAMPLE");
        }
        current_has_solution = true;
        state = State::Solution;
        if (!inline_text.empty()) append_line(examples.back().worked_solution, inline_text);
        continue;
      case Header::ErrorPoints:
        if (state == State::Statement) plan_error("ERROR-PRONE POINTS inside an example question");
        if (state != State::Preamble) state = State::Skip;
        continue;
      case Header::None:
        break;
    }
    switch (state) {
      case State::Knowledge: append_line(knowledge, line); break;
      case State::Statement: append_line(examples.back().statement, line); break;
      case State::Solution: append_line(examples.back().worked_solution, line); break;
      case State::Preamble:
      case State::Skip: break;
    }
  }
  if (!seen_knowledge) plan_error("no KNOWLEDGE section");
  close_example();
  PlanBody body{std::string(trim(knowledge)), std::move(examples)};
  if (body.knowledge_explanation.empty()) plan_error("KNOWLEDGE section is empty");
  return body;
}

CidppScore make_cidpp_score(const std::array<double, 5>& dims, const CidppWeights& weights,
                            std::optional<double> judge_overall) {
  double weighted = 0.0;
  double total_weight = 0.0;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (!(dims[i] >= 0.0 && dims[i] <= 100.0)) {
      throw Error(ErrorKind::ScoreOutOfRange,
                  fmt::format("{} score {} outside [0, 100]", kCidppDimensionNames[i], dims[i]));
    }
    if (!(weights.values[i] >= 0.0) || !std::isfinite(weights.values[i])) {
      invalid("rubric weights must be finite and non-negative");
    }
    weighted += weights.values[i] * dims[i];
    total_weight += weights.values[i];
  }
  if (!(total_weight > 0.0)) invalid("rubric weights sum to zero");
  if (judge_overall && !(*judge_overall >= 0.0 && *judge_overall <= 100.0)) {
    throw Error(ErrorKind::ScoreOutOfRange,
                fmt::format("overall score {} outside [0, 100]", *judge_overall));
  }
  CidppScore score;
  score.clarity = dims[0];
  score.integrity = dims[1];
  score.depth = dims[2];
  score.practicality = dims[3];
  score.pertinence = dims[4];
  score.aggregate = weighted / total_weight;
  score.judge_overall = judge_overall;
  return score;
}

std::string_view to_string(QuestionSource source) {
  switch (source) {
    case QuestionSource::Gsm8k: return "gsm8k";
    case QuestionSource::Algebra: return "algebra";
    case QuestionSource::Custom: return "custom";
  }
  return "custom";
}

QuestionSource question_source_from_string(std::string_view text) {
  if (text == "gsm8k") return QuestionSource::Gsm8k;
  if (text == "algebra") return QuestionSource::Algebra;
  if (text == "custom") return QuestionSource::Custom;
  throw Error(ErrorKind::ParseError, fmt::format("unknown question source '{}'", text));
}

void to_json(json& j, const SubNode& v) { j = json{{"label", v.label()}, {"level", v.level()}}; }

void to_json(json& j, const AbilityNode& v) {
  j = json{{"name", v.name}, {"sub_nodes", v.sub_nodes}};
}

void to_json(json& j, const SkillTree& v) {
  j = json{{"topic", v.topic()}, {"abilities", v.abilities()}};
}

void to_json(json& j, const ErrorPoint& v) {
  j = json{{"mistake_id", v.mistake_id},
           {"description", v.description},
           {"probability", v.probability},
           {"explanation", v.explanation}};
}

void to_json(json& j, const ExampleItem& v) {
  j = json{{"statement", v.statement},
           {"worked_solution", v.worked_solution},
           {"error_points", v.error_points}};
}

void to_json(json& j, const LessonPlan& v) {
  j = json{{"id", v.id},
           {"topic", v.topic},
           {"knowledge_explanation", v.knowledge_explanation},
           {"examples", v.examples},
           {"parent_id", v.parent_id ? json(*v.parent_id) : json(nullptr)},
           {"round", v.round}};
}

void to_json(json& j, const TestQuestion& v) {
  j = json{{"id", v.id},
           {"statement", v.statement},
           {"reference_answer", v.reference_answer},
           {"source", to_string(v.source)}};
}

void to_json(json& j, const EvalResult& v) {
  j = json{{"post_score", v.post_score},
           {"advantages", v.advantages},
           {"disadvantages", v.disadvantages},
           {"per_question_scores", v.per_question_scores}};
}

void to_json(json& j, const CidppScore& v) {
  j = json{{"clarity", v.clarity},
           {"integrity", v.integrity},
           {"depth", v.depth},
           {"practicality", v.practicality},
           {"pertinence", v.pertinence},
           {"aggregate", v.aggregate},
           {"judge_overall", v.judge_overall ? json(*v.judge_overall) : json(nullptr)}};
}

SkillTree skill_tree_from_json(const json& j) {
  return decoding("skill tree", [&] {
    std::vector<AbilityNode> abilities;
    for (const auto& a : j.at("abilities")) {
      AbilityNode node{a.at("name").get<std::string>(), {}};
      for (const auto& s : a.at("sub_nodes")) {
        node.sub_nodes.emplace_back(s.at("label").get<std::string>(), s.at("level").get<int>());
      }
      abilities.push_back(std::move(node));
    }
    return SkillTree(j.at("topic").get<std::string>(), std::move(abilities));
  });
}

ErrorPoint error_point_from_json(const json& j) {
  return decoding("error point", [&] {
    return ErrorPoint{j.at("mistake_id").get<std::string>(), j.at("description").get<std::string>(),
                      j.at("probability").get<double>(), j.at("explanation").get<std::string>()};
  });
}

LessonPlan lesson_plan_from_json(const json& j) {
  auto plan = decoding("lesson plan", [&] {
    LessonPlan p;
    p.id = j.at("id").get<std::string>();
    p.topic = j.at("topic").get<std::string>();
    p.knowledge_explanation = j.at("knowledge_explanation").get<std::string>();
    for (const auto& e : j.at("examples")) {
      ExampleItem item;
      item.statement = e.at("statement").get<std::string>();
      item.worked_solution = e.at("worked_solution").get<std::string>();
      if (e.contains("error_points")) {
        for (const auto& point : e.at("error_points")) {
          item.error_points.push_back(error_point_from_json(point));
        }
      }
      p.examples.push_back(std::move(item));
    }
    if (j.contains("parent_id") && !j.at("parent_id").is_null()) {
      p.parent_id = j.at("parent_id").get<std::string>();
    }
    p.round = j.value("round", 0);
    return p;
  });
  validate(plan);
  return plan;
}

TestQuestion test_question_from_json(const json& j) {
  return decoding("test question", [&] {
    TestQuestion q{j.at("id").get<std::string>(), j.at("statement").get<std::string>(),
                   j.at("reference_answer").get<std::string>(),
                   question_source_from_string(j.value("source", std::string("custom")))};
    if (trim(q.statement).empty() || trim(q.reference_answer).empty()) {
      invalid(fmt::format("question '{}' needs a statement and a reference answer", q.id));
    }
    return q;
  });
}

EvalResult eval_result_from_json(const json& j) {
  auto result = decoding("evaluation result", [&] {
    return EvalResult{j.at("post_score").get<double>(), j.at("advantages").get<std::string>(),
                      j.at("disadvantages").get<std::string>(),
                      j.at("per_question_scores").get<std::vector<double>>()};
  });
  if (result.per_question_scores.empty()) invalid("evaluation result has no question scores");
  const double mean =
      std::accumulate(result.per_question_scores.begin(), result.per_question_scores.end(), 0.0) /
      static_cast<double>(result.per_question_scores.size());
  if (std::abs(mean - result.post_score) > 1e-9) {
    invalid("evaluation post_score is not the mean of its question scores");
  }
  return result;
}

CidppScore cidpp_score_from_json(const json& j) {
  return decoding("rubric score", [&] {
    CidppScore s;
    s.clarity = j.at("clarity").get<double>();
    s.integrity = j.at("integrity").get<double>();
    s.depth = j.at("depth").get<double>();
    s.practicality = j.at("practicality").get<double>();
    s.pertinence = j.at("pertinence").get<double>();
    s.aggregate = j.at("aggregate").get<double>();
    if (j.contains("judge_overall") && !j.at("judge_overall").is_null()) {
      s.judge_overall = j.at("judge_overall").get<double>();
    }
    for (const double d : s.dimensions()) {
      if (!(d >= 0.0 && d <= 100.0)) {
        throw Error(ErrorKind::ScoreOutOfRange, fmt::format("rubric score {} outside [0, 100]", d));
      }
    }
    return s;
  });
}

}  // namespace planforge
