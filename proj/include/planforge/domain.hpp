#pragma once

// Value types shared by every stage of the pipeline, plus their JSON codecs.
// All of them are immutable once constructed and validated, so they can be
// shared across worker threads freely.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace planforge {

inline constexpr std::size_t kAbilityCount = 5;
inline constexpr std::size_t kSubNodeCount = 5;
inline constexpr int kMinLevel = 1;
inline constexpr int kMaxLevel = 5;

/// Canonical ability names, in tree order.
inline constexpr std::array<std::string_view, kAbilityCount> kAbilityNames = {
    "Numerical Calculation", "Abstract Thinking", "Logical Reasoning",
    "Analogy Association", "Spatial Imagination"};

/// Bundled sub-dimension labels, one row per ability.
const std::array<std::array<std::string_view, kSubNodeCount>, kAbilityCount>&
default_sub_node_labels();

class SubNode {
 public:
  /// Throws LevelOutOfRange unless level is in [1, 5].
  SubNode(std::string label, int level);

  const std::string& label() const noexcept { return label_; }
  int level() const noexcept { return level_; }

  bool operator==(const SubNode&) const = default;

 private:
  std::string label_;
  int level_;
};

struct AbilityNode {
  std::string name;
  std::vector<SubNode> sub_nodes;

  bool operator==(const AbilityNode&) const = default;
};

using LevelMatrix = std::vector<std::vector<int>>;

/// Group-level ability model: a topic root plus five abilities of five
/// leveled sub-nodes each.
class SkillTree {
 public:
  /// Throws EmptyTopic, ShapeError or InvalidValue (wrong ability names).
  SkillTree(std::string topic, std::vector<AbilityNode> abilities);

  const std::string& topic() const noexcept { return topic_; }
  const std::vector<AbilityNode>& abilities() const noexcept { return abilities_; }

  bool operator==(const SkillTree&) const = default;

 private:
  std::string topic_;
  std::vector<AbilityNode> abilities_;
};

/// Builds a tree from a 5x5 level matrix using the bundled sub-node labels.
SkillTree build_skill_tree(std::string topic, const LevelMatrix& levels);

/// Mean of the ability's five sub-node levels.
double primary_score(const SkillTree& tree, std::size_t ability_index);

/// Deterministic text block describing the tree, used inside agent prompts.
std::string render_skill_tree_fragment(const SkillTree& tree);

struct ErrorPoint {
  std::string mistake_id;
  std::string description;
  double probability = 0.0;
  std::string explanation;

  bool operator==(const ErrorPoint&) const = default;
};

struct ExampleItem {
  std::string statement;
  std::string worked_solution;
  std::vector<ErrorPoint> error_points;

  bool operator==(const ExampleItem&) const = default;
};

struct LessonPlan {
  std::string id;
  std::string topic;
  std::string knowledge_explanation;
  std::vector<ExampleItem> examples;
  std::optional<std::string> parent_id;
  int round = 0;

  bool operator==(const LessonPlan&) const = default;
};

/// Throws InvalidValue if the plan breaks a type invariant.
void validate(const LessonPlan& plan);

/// Text form used in prompts; the optimizer is asked to answer in the same
/// layout, see parse_plan_text.
std::string render_plan_text(const LessonPlan& plan);

/// The content half of a plan, as produced by an agent reply.
struct PlanBody {
  std::string knowledge_explanation;
  std::vector<ExampleItem> examples;
};

/// Parses the KNOWLEDGE / EXAMPLE n / SOLUTION layout. Text before the first
/// KNOWLEDGE header and ERROR-PRONE POINTS sections are ignored. Throws
/// PlanParseError.
PlanBody parse_plan_text(std::string_view text);

enum class QuestionSource { Gsm8k, Algebra, Custom };

struct TestQuestion {
  std::string id;
  std::string statement;
  std::string reference_answer;
  QuestionSource source = QuestionSource::Custom;

  bool operator==(const TestQuestion&) const = default;
};

struct EvalResult {
  double post_score = 0.0;
  std::string advantages;
  std::string disadvantages;
  std::vector<double> per_question_scores;

  bool operator==(const EvalResult&) const = default;
};

/// Relative weights of the five rubric dimensions.
struct CidppWeights {
  std::array<double, 5> values{1.0, 1.0, 1.0, 1.0, 1.0};
};

inline constexpr std::array<std::string_view, 5> kCidppDimensionNames = {
    "Clarity", "Integrity", "Depth", "Practicality", "Pertinence"};

struct CidppScore {
  double clarity = 0.0;
  double integrity = 0.0;
  double depth = 0.0;
  double practicality = 0.0;
  double pertinence = 0.0;
  double aggregate = 0.0;
  std::optional<double> judge_overall;

  std::array<double, 5> dimensions() const {
    return {clarity, integrity, depth, practicality, pertinence};
  }

  bool operator==(const CidppScore&) const = default;
};

/// Builds a score with the aggregate computed as the weighted mean.
CidppScore make_cidpp_score(const std::array<double, 5>& dims,
                            const CidppWeights& weights = {},
                            std::optional<double> judge_overall = std::nullopt);

std::string_view to_string(QuestionSource source);
QuestionSource question_source_from_string(std::string_view text);

// JSON codecs. Field names are the on-disk schema.
void to_json(nlohmann::json& j, const SubNode& v);
void to_json(nlohmann::json& j, const AbilityNode& v);
void to_json(nlohmann::json& j, const SkillTree& v);
void to_json(nlohmann::json& j, const ErrorPoint& v);
void to_json(nlohmann::json& j, const ExampleItem& v);
void to_json(nlohmann::json& j, const LessonPlan& v);
void to_json(nlohmann::json& j, const TestQuestion& v);
void to_json(nlohmann::json& j, const EvalResult& v);
void to_json(nlohmann::json& j, const CidppScore& v);

SkillTree skill_tree_from_json(const nlohmann::json& j);
LessonPlan lesson_plan_from_json(const nlohmann::json& j);
ErrorPoint error_point_from_json(const nlohmann::json& j);
TestQuestion test_question_from_json(const nlohmann::json& j);
EvalResult eval_result_from_json(const nlohmann::json& j);
CidppScore cidpp_score_from_json(const nlohmann::json& j);

}  // namespace planforge
