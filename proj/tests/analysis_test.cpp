#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <fstream>
#include <random>

#include "planforge/analysis.hpp"
#include "planforge/error.hpp"
#include "support.hpp"

using namespace planforge;
using nlohmann::json;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::InvalidValue;
}

CommonMistake mistake(std::string id, double base, TagSet tags, int group = 1) {
  return {std::move(id), group, "description", std::move(tags), base};
}

LevelMatrix uniform(int level) { return LevelMatrix(5, std::vector<int>(5, level)); }

// Exhaustive reference: score everything with its own arithmetic, sort the
// whole list, keep three.
std::vector<std::pair<std::string, double>> brute_force_top3(const MistakeDatabase& db,
                                                             const TagSet& kb) {
  std::vector<std::pair<std::string, double>> all;
  for (const auto& m : db.mistakes) {
    std::vector<std::string> common;
    std::set_intersection(m.tags.begin(), m.tags.end(), kb.begin(), kb.end(),
                          std::back_inserter(common));
    double p = m.base_probability * static_cast<double>(common.size()) /
               static_cast<double>(m.tags.size());
    if (p < 0.01) p = 0.01;
    if (p > 0.99) p = 0.99;
    all.emplace_back(m.id, p);
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return std::make_pair(-a.second, a.first) < std::make_pair(-b.second, b.first);
  });
  all.resize(3);
  return all;
}

SkillTree random_tree(std::mt19937_64& rng) {
  LevelMatrix levels = uniform(1);
  for (auto& row : levels) {
    for (auto& v : row) v = 1 + static_cast<int>(rng() % 5);
  }
  return build_skill_tree("algebraic equations", levels);
}

support::Responder analyst_echo() {
  return [](const AgentConfig&, std::span<const ChatMessage> m) {
    const auto& text = m.back().content;
    const auto at = text.find("Common mistake");
    return fmt::format("EXPLANATION: because {}", text.substr(at, 40));
  };
}

}  // namespace

TEST(MistakeDatabase, BundledShape) {
  const auto db = load_bundled_cmd();
  ASSERT_EQ(db.mistakes.size(), 50u);
  std::map<int, int> groups;
  std::set<std::string> ids;
  for (const auto& m : db.mistakes) {
    ++groups[m.group];
    ids.insert(m.id);
    EXPECT_FALSE(m.tags.empty());
    EXPECT_GT(m.base_probability, 0.0);
    EXPECT_LT(m.base_probability, 1.0);
  }
  EXPECT_EQ(ids.size(), 50u);
  ASSERT_EQ(groups.size(), 5u);
  for (const auto& [group, count] : groups) EXPECT_EQ(count, 10) << "group " << group;
}

TEST(MistakeDatabase, BundledRuleAppliesOnlyToBundled) {
  auto db = load_bundled_cmd();
  db.mistakes.resize(7);
  EXPECT_EQ(kind_of([&] { check_bundled_shape(db); }), ErrorKind::InvariantViolation);
  support::TempDir dir;
  const auto path = dir.file("seven.json");
  std::ofstream(path) << to_json(db).dump();
  EXPECT_EQ(load_cmd(path).mistakes.size(), 7u);
}

TEST(MistakeDatabase, RejectsBadEntries) {
  auto entry = [](const std::string& field, json value) {
    json m = {{"id", "X1"}, {"group", 1}, {"description", "d"}, {"tags", {"t"}},
              {"base_probability", 0.5}};
    m[field] = std::move(value);
    return json::array({m}).dump();
  };
  EXPECT_EQ(kind_of([&] { parse_cmd(entry("base_probability", 1.2)); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([&] { parse_cmd(entry("base_probability", 0.0)); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([&] { parse_cmd(entry("group", 6)); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([&] { parse_cmd(entry("tags", json::array())); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([&] { parse_cmd(entry("description", "")); }), ErrorKind::ParseError);
  EXPECT_EQ(kind_of([&] { parse_cmd("{"); }), ErrorKind::ParseError);
  const auto one = json::parse(entry("group", 2));
  EXPECT_EQ(kind_of([&] { parse_cmd(json::array({one[0], one[0]}).dump()); }), ErrorKind::ParseError);
}

TEST(MistakeDatabase, JsonRoundTrip) {
  const auto db = load_bundled_cmd();
  EXPECT_EQ(parse_cmd(to_json(db).dump()), db);
}

TEST(MistakeProbability, Formula) {
  EXPECT_DOUBLE_EQ(mistake_probability(mistake("a", 0.6, {"x", "y"}), {"x", "y", "z"}), 0.6);
  EXPECT_DOUBLE_EQ(mistake_probability(mistake("a", 0.5, {"w", "x", "y", "z"}), {"x", "y"}), 0.25);
  EXPECT_DOUBLE_EQ(mistake_probability(mistake("a", 0.9, {"x"}), {"y"}), 0.01);
  EXPECT_DOUBLE_EQ(mistake_probability(mistake("a", 0.995, {"x"}), {"x"}), 0.99);
}

TEST(MistakeProbability, Monotone) {
  const TagSet all = {"a", "b", "c", "d", "e"};
  std::vector<std::string> order(all.begin(), all.end());
  for (double base = 0.05; base < 1.0; base += 0.05) {
    double prev = 0.0;
    TagSet kb;
    for (std::size_t k = 0; k <= order.size(); ++k) {
      const double p = mistake_probability(mistake("m", base, all), kb);
      EXPECT_GE(p, prev);
      prev = p;
      if (k < order.size()) kb.insert(order[k]);
    }
    EXPECT_GE(mistake_probability(mistake("m", std::min(base + 0.04, 0.99), all), {"a", "b"}),
              mistake_probability(mistake("m", base, all), {"a", "b"}));
  }
}

TEST(KnowledgeBackground, WeakAbilitiesContributeTags) {
  auto levels = uniform(4);
  levels[1] = {3, 3, 3, 3, 3};
  levels[3] = {1, 2, 2, 2, 2};
  const auto tags = knowledge_background_tags(build_skill_tree("t", levels));
  EXPECT_EQ(tags, (TagSet{"abstract-thinking", "analogy-association"}));

  AnalysisOptions strict;
  strict.weak_threshold = 2.0;
  EXPECT_EQ(knowledge_background_tags(build_skill_tree("t", levels), strict),
            (TagSet{"analogy-association"}));
}

TEST(Retrieval, ExactlyThreeAndTies) {
  const auto tree = build_skill_tree("t", uniform(1));
  const ExampleItem example{"q", "s", {}};
  MistakeDatabase three{{mistake("c", 0.3, {"numerical-calculation"}),
                         mistake("a", 0.8, {"numerical-calculation"}),
                         mistake("b", 0.5, {"numerical-calculation"})}};
  auto top = retrieve_top_mistakes(three, tree, example);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].mistake.id, "a");
  EXPECT_EQ(top[1].mistake.id, "b");
  EXPECT_EQ(top[2].mistake.id, "c");

  MistakeDatabase tied{{mistake("z", 0.5, {"logical-reasoning"}),
                        mistake("m", 0.5, {"logical-reasoning"}),
                        mistake("q", 0.5, {"logical-reasoning"}),
                        mistake("a", 0.2, {"logical-reasoning"})}};
  top = retrieve_top_mistakes(tied, tree, example);
  EXPECT_EQ(top[0].mistake.id, "m");
  EXPECT_EQ(top[1].mistake.id, "q");
  EXPECT_EQ(top[2].mistake.id, "z");

  MistakeDatabase two{{three.mistakes[0], three.mistakes[1]}};
  EXPECT_EQ(kind_of([&] { retrieve_top_mistakes(two, tree, example); }),
            ErrorKind::InsufficientMistakes);
}

TEST(Retrieval, MatchesBruteForceOracle) {
  const auto full = load_bundled_cmd();
  const ExampleItem example{"q", "s", {}};
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 300; ++trial) {
    const auto tree = trial == 0 ? support::default_tree() : random_tree(rng);
    auto db = full;
    if (trial % 3 == 1) {
      std::shuffle(db.mistakes.begin(), db.mistakes.end(), rng);
      db.mistakes.resize(3 + rng() % 48);
    }
    const auto expected = brute_force_top3(db, knowledge_background_tags(tree));
    const auto got = retrieve_top_mistakes(db, tree, example);
    ASSERT_EQ(got.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_EQ(got[k].mistake.id, expected[k].first);
      EXPECT_DOUBLE_EQ(got[k].probability, expected[k].second);
    }
  }
}

TEST(Explanation, Parser) {
  EXPECT_EQ(parse_explanation("EXPLANATION: sign slip"), "sign slip");
  EXPECT_EQ(parse_explanation("Sure.\nEXPLANATION:  divide both sides \n"), "divide both sides");
  EXPECT_EQ(kind_of([] { parse_explanation("sign slip"); }), ErrorKind::ExplanationParseError);
  EXPECT_EQ(kind_of([] { parse_explanation("EXPLANATION:   "); }), ErrorKind::ExplanationParseError);
}

TEST(Aaea, ThreeSortedPointsPerExample) {
  support::FunctionBackend backend(analyst_echo());
  const Agent analyst{backend, AgentConfig::defaults_for(AgentRole::Analyst)};
  const auto plan = support::leveled_plan(0);
  const auto before = plan;
  const auto result = aaea_annotate(analyst, plan, load_bundled_cmd(), support::default_tree());
  EXPECT_EQ(plan, before);
  EXPECT_TRUE(result.warnings.empty());
  ASSERT_EQ(result.plan.examples.size(), 2u);
  std::size_t total = 0;
  for (const auto& example : result.plan.examples) {
    ASSERT_EQ(example.error_points.size(), 3u);
    total += example.error_points.size();
    for (std::size_t k = 1; k < 3; ++k) {
      EXPECT_GE(example.error_points[k - 1].probability, example.error_points[k].probability);
    }
    for (const auto& point : example.error_points) {
      EXPECT_EQ(point.explanation.rfind("because Common mistake", 0), 0u) << point.explanation;
    }
  }
  EXPECT_EQ(total, 6u);
  EXPECT_EQ(backend.calls(), 6u);
  EXPECT_NO_THROW(validate(result.plan));
}

TEST(Aaea, ReannotationReplacesPoints) {
  support::FunctionBackend backend(analyst_echo());
  const Agent analyst{backend, AgentConfig::defaults_for(AgentRole::Analyst)};
  const auto db = load_bundled_cmd();
  const auto tree = support::default_tree();
  const auto once = aaea_annotate(analyst, support::leveled_plan(0), db, tree).plan;
  const auto twice = aaea_annotate(analyst, once, db, tree).plan;
  for (const auto& example : twice.examples) EXPECT_EQ(example.error_points.size(), 3u);
  EXPECT_EQ(once, twice);
}

TEST(Aaea, ZeroExamplesPassThrough) {
  support::FunctionBackend backend(analyst_echo());
  const Agent analyst{backend, AgentConfig::defaults_for(AgentRole::Analyst)};
  auto plan = support::leveled_plan(0);
  plan.examples.clear();
  const auto result = aaea_annotate(analyst, plan, load_bundled_cmd(), support::default_tree());
  EXPECT_EQ(result.plan, plan);
  EXPECT_EQ(result.warnings.size(), 1u);
  EXPECT_EQ(backend.calls(), 0u);
}

TEST(Aaea, UnusableExplanationFailsAfterReask) {
  support::FunctionBackend backend([](const AgentConfig&, std::span<const ChatMessage>) {
    return std::string("It is a common slip.");
  });
  const Agent analyst{backend, AgentConfig::defaults_for(AgentRole::Analyst)};
  EXPECT_EQ(kind_of([&] {
              aaea_annotate(analyst, support::leveled_plan(0), load_bundled_cmd(), support::default_tree(),
                            AnalysisOptions{3.0, AnalysisOptions::default_ability_tags(), 1});
            }),
            ErrorKind::ExplanationParseError);
}
