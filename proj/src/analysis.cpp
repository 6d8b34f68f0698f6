#include "planforge/analysis.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "planforge/assets.hpp"
#include "planforge/detail/parallel.hpp"
#include "planforge/error.hpp"
#include "planforge/util.hpp"

namespace planforge {

using nlohmann::json;

namespace {

[[noreturn]] void parse_error(const std::string& message) {
  throw Error(ErrorKind::ParseError, message);
}

constexpr std::size_t kPointsPerExample = 3;

}  // namespace

MistakeDatabase parse_cmd(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    parse_error(fmt::format("mistake database is not valid JSON: {}", e.what()));
  }
  if (!doc.is_array()) parse_error("mistake database must be a JSON array");

  MistakeDatabase db;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& entry = doc[i];
    CommonMistake m;
    try {
      m.id = entry.at("id").get<std::string>();
      m.group = entry.at("group").get<int>();
      m.description = entry.at("description").get<std::string>();
      for (const auto& tag : entry.at("tags")) m.tags.insert(tag.get<std::string>());
      m.base_probability = entry.at("base_probability").get<double>();
    } catch (const json::exception& e) {
      parse_error(fmt::format("mistake entry {}: {}", i, e.what()));
    }
    if (trim(m.id).empty()) parse_error(fmt::format("mistake entry {} has an empty id", i));
    if (!ids.insert(m.id).second) parse_error(fmt::format("mistake id '{}' repeated", m.id));
    if (m.group < 1 || m.group > kMistakeGroups) {
      parse_error(fmt::format("mistake '{}' group {} outside 1..{}", m.id, m.group, kMistakeGroups));
    }
    if (trim(m.description).empty()) parse_error(fmt::format("mistake '{}' has no description", m.id));
    if (m.tags.empty()) parse_error(fmt::format("mistake '{}' has no tags", m.id));
    if (!(m.base_probability > 0.0 && m.base_probability < 1.0)) {
      parse_error(fmt::format("mistake '{}' base_probability {} outside (0, 1)", m.id,
                              m.base_probability));
    }
    db.mistakes.push_back(std::move(m));
  }
  return db;
}

MistakeDatabase load_cmd(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    parse_error(e.what());
  }
  return parse_cmd(text);
}

void check_bundled_shape(const MistakeDatabase& db) {
  if (db.mistakes.size() != kBundledMistakeCount) {
    throw Error(ErrorKind::InvariantViolation,
                fmt::format("bundled database has {} mistakes, expected {}", db.mistakes.size(),
                            kBundledMistakeCount));
  }
  std::array<std::size_t, kMistakeGroups> per_group{};
  for (const auto& m : db.mistakes) ++per_group[static_cast<std::size_t>(m.group - 1)];
  for (std::size_t g = 0; g < per_group.size(); ++g) {
    if (per_group[g] != kBundledMistakeCount / kMistakeGroups) {
      throw Error(ErrorKind::InvariantViolation,
                  fmt::format("bundled database group {} has {} mistakes", g + 1, per_group[g]));
    }
  }
}

MistakeDatabase load_bundled_cmd() {
  auto db = parse_cmd(bundled_asset("data/mistakes_algebra.json"));
  check_bundled_shape(db);
  return db;
}

json to_json(const MistakeDatabase& db) {
  json out = json::array();
  for (const auto& m : db.mistakes) {
    out.push_back(json{{"id", m.id},
                       {"group", m.group},
                       {"description", m.description},
                       {"tags", m.tags},
                       {"base_probability", m.base_probability}});
  }
  return out;
}

double mistake_probability(const CommonMistake& mistake, const TagSet& kb_tags) {
  if (mistake.tags.empty()) {
    throw Error(ErrorKind::InvalidValue, fmt::format("mistake '{}' has no tags", mistake.id));
  }
  const auto overlap = static_cast<double>(std::count_if(
      mistake.tags.begin(), mistake.tags.end(),
      [&](const std::string& tag) { return kb_tags.contains(tag); }));
  const double p = mistake.base_probability * overlap / static_cast<double>(mistake.tags.size());
  return std::clamp(p, 0.01, 0.99);
}

std::array<std::string, kAbilityCount> AnalysisOptions::default_ability_tags() {
  const auto doc = json::parse(bundled_asset("data/ability_tags.json"));
  std::array<std::string, kAbilityCount> tags;
  for (std::size_t i = 0; i < kAbilityCount; ++i) {
    tags[i] = doc.at(std::string(kAbilityNames[i])).get<std::string>();
  }
  return tags;
}

TagSet knowledge_background_tags(const SkillTree& tree, const AnalysisOptions& options) {
  TagSet tags;
  for (std::size_t i = 0; i < kAbilityCount; ++i) {
    if (primary_score(tree, i) <= options.weak_threshold) tags.insert(options.ability_tags[i]);
  }
  return tags;
}

std::vector<RankedMistake> retrieve_top_mistakes(const MistakeDatabase& db, const SkillTree& tree,
                                                 const ExampleItem& /*example*/,
                                                 const AnalysisOptions& options) {
  if (db.mistakes.size() < kPointsPerExample) {
    throw Error(ErrorKind::InsufficientMistakes,
                fmt::format("need at least {} mistakes, database has {}", kPointsPerExample,
                            db.mistakes.size()));
  }
  const auto kb_tags = knowledge_background_tags(tree, options);
  std::vector<RankedMistake> ranked;
  ranked.reserve(db.mistakes.size());
  for (const auto& m : db.mistakes) ranked.push_back({m, mistake_probability(m, kb_tags)});
  std::partial_sort(ranked.begin(), ranked.begin() + kPointsPerExample, ranked.end(),
                    [](const RankedMistake& a, const RankedMistake& b) {
                      if (a.probability != b.probability) return a.probability > b.probability;
                      return a.mistake.id < b.mistake.id;
                    });
  ranked.resize(kPointsPerExample);
  return ranked;
}

std::vector<ChatMessage> analyst_messages(const SkillTree& tree, const ExampleItem& example,
                                          const RankedMistake& mistake) {
  const auto fragment = render_skill_tree_fragment(tree);
  const auto probability = fmt::format("{:.2f}", mistake.probability);
  return {{MessageRole::System, prompt_asset("analyst_system")},
          {MessageRole::User, render_template(prompt_asset("analyst_explain"),
                                              {{"skill_tree", trim(fragment)},
                                               {"example", trim(example.statement)},
                                               {"solution", trim(example.worked_solution)},
                                               {"probability", probability},
                                               {"mistake", mistake.mistake.description}})}};
}

std::string parse_explanation(std::string_view text) {
  constexpr std::string_view kKey = "EXPLANATION:";
  const auto pos = text.find(kKey);
  if (pos == std::string_view::npos) {
    throw Error(ErrorKind::ExplanationParseError, "missing EXPLANATION line");
  }
  const auto explanation = trim(text.substr(pos + kKey.size()));
  if (explanation.empty()) throw Error(ErrorKind::ExplanationParseError, "EXPLANATION is empty");
  return std::string(explanation);
}

AnnotationResult aaea_annotate(const Agent& analyst, const LessonPlan& plan,
                               const MistakeDatabase& db, const SkillTree& tree,
                               const AnalysisOptions& options) {
  AnnotationResult result{plan, {}};
  if (plan.examples.empty()) {
    result.warnings.push_back(
        fmt::format("lesson plan '{}' has no examples; nothing to annotate", plan.id));
    return result;
  }

  std::vector<std::vector<RankedMistake>> top(plan.examples.size());
  for (std::size_t e = 0; e < plan.examples.size(); ++e) {
    top[e] = retrieve_top_mistakes(db, tree, plan.examples[e], options);
  }

  const auto calls = plan.examples.size() * kPointsPerExample;
  std::vector<std::string> explanations(calls);
  detail::parallel_for(calls, options.max_parallel, [&](std::size_t i) {
    const auto e = i / kPointsPerExample;
    const auto& ranked = top[e][i % kPointsPerExample];
    explanations[i] = ask_parsed(analyst, analyst_messages(tree, plan.examples[e], ranked),
                                 parse_explanation, {ErrorKind::ExplanationParseError});
  });

  for (std::size_t e = 0; e < plan.examples.size(); ++e) {
    auto& points = result.plan.examples[e].error_points;
    points.clear();
    for (std::size_t r = 0; r < kPointsPerExample; ++r) {
      const auto& ranked = top[e][r];
      points.push_back(ErrorPoint{ranked.mistake.id, ranked.mistake.description, ranked.probability,
                                  std::move(explanations[e * kPointsPerExample + r])});
    }
    std::stable_sort(points.begin(), points.end(), [](const ErrorPoint& a, const ErrorPoint& b) {
      return a.probability > b.probability;
    });
  }
  return result;
}

}  // namespace planforge
