#pragma once

// Error-prone point annotation backed by a database of common mistakes.

#include <array>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "planforge/agent.hpp"
#include "planforge/domain.hpp"

namespace planforge {

using TagSet = std::set<std::string, std::less<>>;

struct CommonMistake {
  std::string id;
  int group = 1;
  std::string description;
  TagSet tags;
  double base_probability = 0.5;

  bool operator==(const CommonMistake&) const = default;
};

struct MistakeDatabase {
  std::vector<CommonMistake> mistakes;

  bool operator==(const MistakeDatabase&) const = default;
};

inline constexpr std::size_t kBundledMistakeCount = 50;
inline constexpr int kMistakeGroups = 5;

/// Parses and validates a JSON array of {id, group, description, tags,
/// base_probability}. Throws ParseError for malformed entries, out-of-range
/// values or repeated ids.
MistakeDatabase parse_cmd(std::string_view json_text);
MistakeDatabase load_cmd(const std::string& path);

/// The bundled algebra database. Throws InvariantViolation unless it holds
/// exactly 50 mistakes, 10 in each of the 5 groups.
MistakeDatabase load_bundled_cmd();
void check_bundled_shape(const MistakeDatabase& db);

nlohmann::json to_json(const MistakeDatabase& db);

/// clamp(base * |tags & kb_tags| / |tags|, 0.01, 0.99)
double mistake_probability(const CommonMistake& mistake, const TagSet& kb_tags);

struct AnalysisOptions {
  /// Abilities whose mean level is at or below this contribute their tag.
  double weak_threshold = 3.0;
  /// Knowledge-background tag per ability, in canonical ability order.
  std::array<std::string, kAbilityCount> ability_tags = default_ability_tags();
  std::size_t max_parallel = 4;

  static std::array<std::string, kAbilityCount> default_ability_tags();
};

TagSet knowledge_background_tags(const SkillTree& tree, const AnalysisOptions& options = {});

struct RankedMistake {
  CommonMistake mistake;
  double probability = 0.0;
};

/// Top three mistakes by (probability desc, id asc). Throws
/// InsufficientMistakes for databases smaller than three.
std::vector<RankedMistake> retrieve_top_mistakes(const MistakeDatabase& db, const SkillTree& tree,
                                                 const ExampleItem& example,
                                                 const AnalysisOptions& options = {});

std::vector<ChatMessage> analyst_messages(const SkillTree& tree, const ExampleItem& example,
                                          const RankedMistake& mistake);

/// Text following "EXPLANATION:". Throws ExplanationParseError.
std::string parse_explanation(std::string_view text);

struct AnnotationResult {
  LessonPlan plan;
  std::vector<std::string> warnings;
};

/// Replaces every example's error points with the three most likely
/// mistakes, each explained by the analyst. The input plan is not modified.
AnnotationResult aaea_annotate(const Agent& analyst, const LessonPlan& plan,
                               const MistakeDatabase& db, const SkillTree& tree,
                               const AnalysisOptions& options = {});

}  // namespace planforge
