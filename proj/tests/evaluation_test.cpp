#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <regex>

#include "planforge/error.hpp"
#include "planforge/evaluation.hpp"
#include "planforge/util.hpp"
#include "support.hpp"

using namespace planforge;

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

std::vector<TestQuestion> numbered_questions(std::size_t n) {
  std::vector<TestQuestion> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({fmt::format("q{}", i), fmt::format("Question #{}: solve x + {} = {}.", i, i, i + 3),
                   "3", QuestionSource::Custom});
  }
  return out;
}

int question_number(std::string_view prompt) {
  static const std::regex re(R"(Question #(\d+):)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(prompt.begin(), prompt.end(), m, re)) return -1;
  return std::stoi(m[1].str());
}

// Scores each question from a table; the summary call echoes fixed text.
support::Responder table_responder(std::vector<int> scores) {
  return [scores = std::move(scores)](const AgentConfig&, std::span<const ChatMessage> messages) {
    const int q = question_number(messages.back().content);
    if (q < 0) return std::string("ADVANTAGE: concise\nDISADVANTAGE: shallow");
    return fmt::format("SCORE: {}\nADVANTAGE: a{}\nDISADVANTAGE: d{}", scores.at(static_cast<std::size_t>(q)),
                       q, q);
  };
}

EvalResult evaluate_with(std::vector<int> scores, std::span<const TestQuestion> questions,
                         std::size_t parallel = 4) {
  support::FunctionBackend backend(table_responder(std::move(scores)));
  const Agent evaluator{backend, AgentConfig::defaults_for(AgentRole::Evaluator)};
  return eaee_evaluate(evaluator, support::leveled_plan(0), support::default_tree(), questions,
                       {parallel});
}

CidppVerdict random_verdict(std::mt19937_64& rng) {
  static const std::vector<std::string> words = {"clear", "steps", "deep", "links", "targets",
                                                 "weak",  "group", "real", "world", "examples"};
  CidppVerdict v;
  for (std::size_t k = 0; k < 5; ++k) {
    v.points[k] = static_cast<double>(rng() % 1001) / 10.0;
    std::string analysis;
    for (auto n = 1 + rng() % 6; n > 0; --n) {
      if (!analysis.empty()) analysis += ' ';
      analysis += words[rng() % words.size()];
    }
    v.analyses[k] = analysis;
  }
  if (rng() % 2) v.overall = static_cast<double>(rng() % 101);
  return v;
}

}  // namespace

TEST(QuestionVerdict, ParsesGrammar) {
  const auto v = parse_question_verdict("SCORE: 85\nADVANTAGE: clear steps\nDISADVANTAGE: no visuals");
  EXPECT_EQ(v.score, 85.0);
  EXPECT_EQ(v.advantage, "clear steps");
  EXPECT_EQ(v.disadvantage, "no visuals");

  const auto reordered = parse_question_verdict(
      "Some reasoning first.\nDISADVANTAGE: no visuals\n  SCORE: 0\nADVANTAGE: x\nSCORE: 50");
  EXPECT_EQ(reordered.score, 0.0);
  EXPECT_EQ(reordered.disadvantage, "no visuals");
}

TEST(QuestionVerdict, Rejects) {
  EXPECT_EQ(kind_of([] { parse_question_verdict("SCORE: 105\nADVANTAGE: a\nDISADVANTAGE: d"); }),
            ErrorKind::ScoreOutOfRange);
  EXPECT_EQ(kind_of([] { parse_question_verdict("SCORE: -1\nADVANTAGE: a\nDISADVANTAGE: d"); }),
            ErrorKind::ScoreOutOfRange);
  const std::vector<std::string> malformed = {
      "",
      "ADVANTAGE: a\nDISADVANTAGE: d",
      "SCORE: 80\nADVANTAGE: a",
      "SCORE: 80\nDISADVANTAGE: d",
      "SCORE: 80\nADVANTAGE:\nDISADVANTAGE: d",
      "SCORE: 80\nADVANTAGE: a\nDISADVANTAGE:   ",
      "SCORE: 85.5\nADVANTAGE: a\nDISADVANTAGE: d",
      "SCORE: high\nADVANTAGE: a\nDISADVANTAGE: d",
      "SCORE:\nADVANTAGE: a\nDISADVANTAGE: d",
      "SCORE: 8 5\nADVANTAGE: a\nDISADVANTAGE: d",
      "SCORE: -\nADVANTAGE: a\nDISADVANTAGE: d",
      "score: 80\nadvantage: a\ndisadvantage: d",
  };
  for (const auto& text : malformed) {
    EXPECT_EQ(kind_of([&] { parse_question_verdict(text); }), ErrorKind::VerdictParseError) << text;
  }
}

TEST(Eaee, MeanOfQuestionScores) {
  const auto qs = numbered_questions(3);
  const auto r = evaluate_with({80, 90, 100}, qs);
  EXPECT_DOUBLE_EQ(r.post_score, 90.0);
  EXPECT_EQ(r.per_question_scores, (std::vector<double>{80, 90, 100}));
  EXPECT_EQ(r.advantages, "concise");
  EXPECT_EQ(r.disadvantages, "shallow");

  const auto single = numbered_questions(1);
  EXPECT_DOUBLE_EQ(evaluate_with({73}, single).post_score, 73.0);
}

TEST(Eaee, EmptyQuestionSet) {
  EXPECT_EQ(kind_of([] { evaluate_with({}, {}); }), ErrorKind::EmptyQuestionSet);
}

TEST(Eaee, PromptCarriesEveryPart) {
  std::vector<std::string> prompts;
  std::mutex mutex;
  support::FunctionBackend backend([&](const AgentConfig& c, std::span<const ChatMessage> m) {
    std::lock_guard lock(mutex);
    prompts.push_back(m.back().content);
    return table_responder({70})(c, m);
  });
  const Agent evaluator{backend, AgentConfig::defaults_for(AgentRole::Evaluator)};
  const auto plan = support::leveled_plan(0);
  const auto tree = support::default_tree();
  eaee_evaluate(evaluator, plan, tree, numbered_questions(1));
  ASSERT_EQ(prompts.size(), 2u);
  const auto& q = prompts[0];
  EXPECT_NE(q.find(std::string(trim(render_skill_tree_fragment(tree)))), std::string::npos);
  EXPECT_NE(q.find(plan.knowledge_explanation), std::string::npos);
  EXPECT_NE(q.find(prompt_asset("evaluation_task")), std::string::npos);
  EXPECT_NE(q.find("Question #0"), std::string::npos);
  EXPECT_NE(prompts[1].find("a0"), std::string::npos);
}

TEST(Eaee, QuestionOrderDoesNotChangeTheMean) {
  auto qs = numbered_questions(6);
  const std::vector<int> scores = {55, 70, 95, 10, 88, 61};
  const auto base = evaluate_with(scores, qs);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(qs.begin(), qs.end(), rng);
    const auto r = evaluate_with(scores, qs);
    EXPECT_NEAR(r.post_score, base.post_score, 1e-9);
    for (std::size_t i = 0; i < qs.size(); ++i) {
      EXPECT_EQ(r.per_question_scores[i], scores[static_cast<std::size_t>(question_number(qs[i].statement))]);
    }
  }
}

TEST(Eaee, MeanOracleOnRandomVectors) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto t = 1 + rng() % 10;
    std::vector<int> scores(t);
    long long sum = 0;
    for (auto& s : scores) {
      s = static_cast<int>(rng() % 101);
      sum += s;
    }
    const auto qs = numbered_questions(t);
    const auto r = evaluate_with(scores, qs, 1);
    EXPECT_NEAR(r.post_score, static_cast<double>(sum) / static_cast<double>(t), 1e-9);
  }
}

TEST(Eaee, ReasksOnceThenFails) {
  std::atomic<int> calls{0};
  support::FunctionBackend flaky([&](const AgentConfig& c, std::span<const ChatMessage> m) {
    if (m.back().content.find("could not be used") != std::string::npos) {
      EXPECT_EQ(m.size(), 4u);
      EXPECT_EQ(m[2].content, "I think about 80 points.");
      return std::string("SCORE: 80\nADVANTAGE: a\nDISADVANTAGE: d");
    }
    if (question_number(m.back().content) >= 0) {
      ++calls;
      return std::string("I think about 80 points.");
    }
    return table_responder({80})(c, m);
  });
  const Agent evaluator{flaky, AgentConfig::defaults_for(AgentRole::Evaluator)};
  const auto r = eaee_evaluate(evaluator, support::leveled_plan(0), support::default_tree(),
                               numbered_questions(1));
  EXPECT_EQ(r.post_score, 80.0);
  EXPECT_EQ(calls.load(), 1);

  support::FunctionBackend broken([](const AgentConfig&, std::span<const ChatMessage>) {
    return std::string("no verdict here");
  });
  const Agent bad{broken, AgentConfig::defaults_for(AgentRole::Evaluator)};
  EXPECT_EQ(kind_of([&] {
              eaee_evaluate(bad, support::leveled_plan(0), support::default_tree(), numbered_questions(2));
            }),
            ErrorKind::VerdictParseError);
  EXPECT_EQ(broken.calls(), 4u);
}

TEST(CidppVerdict, BracketedFormat) {
  const auto v = parse_cidpp_verdict(
      "[A]: 84; clear [B]: 87; complete [C]: 88; deep [D]: 87; applied [E]: 83; targeted");
  EXPECT_EQ(v.points, (std::array<double, 5>{84, 87, 88, 87, 83}));
  EXPECT_EQ(v.analyses[0], "clear");
  EXPECT_EQ(v.analyses[4], "targeted");
  EXPECT_FALSE(v.overall);

  const auto quoted = parse_cidpp_verdict(
      "\"[A]: [84]; clear\", \"[B]: [87]; complete\",\n\"[C]: [88]; deep\", \"[D]: [87]; applied\", "
      "\"[E]: [83]; targeted\"\nOVERALL: 88");
  EXPECT_EQ(quoted.points, v.points);
  EXPECT_EQ(quoted.analyses[0], "clear");
  EXPECT_EQ(quoted.analyses[4], "targeted");
  EXPECT_EQ(quoted.overall, 88.0);
}

TEST(CidppVerdict, LabelsBindValues) {
  const auto v = parse_cidpp_verdict(
      "[B]: 87; b\n[A]: 84; a\n[E]: 83; e\n[D]: 87.5; d\n[C]: 88; c");
  EXPECT_EQ(v.points, (std::array<double, 5>{84, 87, 88, 87.5, 83}));
  EXPECT_EQ(v.analyses[1], "b");
}

TEST(CidppVerdict, Bounds) {
  EXPECT_EQ(kind_of([] { parse_cidpp_verdict("[A]: -5; x [B]: 1; x [C]: 1; x [D]: 1; x [E]: 1; x"); }),
            ErrorKind::ScoreOutOfRange);
  EXPECT_EQ(kind_of([] { parse_cidpp_verdict("[A]: 5; x [B]: 100.5; x [C]: 1; x [D]: 1; x [E]: 1; x"); }),
            ErrorKind::ScoreOutOfRange);
  EXPECT_EQ(kind_of([] { parse_cidpp_verdict("[A]: 5; x [B]: 1; x [C]: 1; x [D]: 1; x [E]: 1; x\nOVERALL: 120"); }),
            ErrorKind::ScoreOutOfRange);
}

TEST(CidppVerdict, RenderRoundTrip) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 100; ++i) {
    const auto v = random_verdict(rng);
    const auto parsed = parse_cidpp_verdict(render_cidpp_verdict(v));
    EXPECT_EQ(parsed.points, v.points);
    EXPECT_EQ(parsed.analyses, v.analyses);
    EXPECT_EQ(parsed.overall, v.overall);
  }
}

TEST(CidppVerdict, RejectsMutants) {
  const std::vector<std::string> mutants = {
      "",
      "[A]: 84; a\n[B]: 87; b\n[C]: 88; c\n[D]: 87; d",
      "[A]: 84; a\n[A]: 80; a\n[B]: 87; b\n[C]: 88; c\n[D]: 87; d\n[E]: 83; e",
      "[A]: 84; a\n[B]: 87; b\n[C]: 88; c\n[D]: 87; d\n[E]: 83; e\n[F]: 50; f",
      "[A]: high; a\n[B]: 87; b\n[C]: 88; c\n[D]: 87; d\n[E]: 83; e",
      "[A]: 84 a\n[B]: 87; b\n[C]: 88; c\n[D]: 87; d\n[E]: 83; e",
      "[A]: ; a\n[B]: 87; b\n[C]: 88; c\n[D]: 87; d\n[E]: 83; e",
      "[A]: 8a4; a\n[B]: 87; b\n[C]: 88; c\n[D]: 87; d\n[E]: 83; e",
      "[A]: [84; a\n[B]: 87; b\n[C]: 88; c\n[D]: 87; d\n[E]: 83; e",
      "[A] 84; a\n[B]: 87; b\n[C]: 88; c\n[D]: 87; d\n[E]: 83; e",
      "[a]: 84; a\n[B]: 87; b\n[C]: 88; c\n[D]: 87; d\n[E]: 83; e",
      "[A]: 84.; a\n[B]: 87; b\n[C]: 88; c\n[D]: 87; d\n[E]: 83; e",
      "[A]: .5; a\n[B]: 87; b\n[C]: 88; c\n[D]: 87; d\n[E]: 83; e",
      "[A]: 1e2; a\n[B]: 87; b\n[C]: 88; c\n[D]: 87; d\n[E]: 83; e",
      "[A]: 84; a\n[B]: 87; b\n[C]: 88; c\n[D]: 87; d\n[E]: 83; e\nOVERALL: 80\nOVERALL: 81",
      "[A]: 84; a\n[B]: 87; b\n[C]: 88; c\n[D]: 87; d\n[E]: 83; e\nOVERALL: great",
      "Clarity 84, Integrity 87, Depth 88, Practicality 87, Pertinence 83",
      "[A]: 84; a\n[B]: 87; b\n[D]: 87; d\n[E]: 83; e",
      "[A]: --5; a\n[B]: 87; b\n[C]: 88; c\n[D]: 87; d\n[E]: 83; e",
      "[A]: 84 85; a\n[B]: 87; b\n[C]: 88; c\n[D]: 87; d\n[E]: 83; e",
  };
  ASSERT_EQ(mutants.size(), 20u);
  for (const auto& text : mutants) {
    EXPECT_EQ(kind_of([&] { parse_cidpp_verdict(text); }), ErrorKind::VerdictParseError) << text;
  }
}

TEST(Cidpp, AssessSendsJudgePromptVerbatim) {
  std::string seen;
  support::FunctionBackend backend([&](const AgentConfig&, std::span<const ChatMessage> m) {
    seen = m.back().content;
    EXPECT_EQ(m.size(), 1u);
    return std::string("[A]: 84.1; a\n[B]: 87.5; b\n[C]: 88.9; c\n[D]: 87.8; d\n[E]: 83.7; e");
  });
  const Agent judge{backend, AgentConfig::defaults_for(AgentRole::Judge)};
  const auto plan = support::leveled_plan(0);
  const auto score = cidpp_assess(judge, plan);
  EXPECT_EQ(score.dimensions(), (std::array<double, 5>{84.1, 87.5, 88.9, 87.8, 83.7}));
  // (84.1 + 87.5 + 88.9 + 87.8 + 83.7) / 5
  EXPECT_NEAR(score.aggregate, 86.4, 1e-9);
  EXPECT_FALSE(score.judge_overall);

  const auto judge_prompt = prompt_asset("cidpp_judge");
  const auto slot = judge_prompt.find("{lessonplan}");
  ASSERT_NE(slot, std::string::npos);
  EXPECT_EQ(seen.substr(0, slot), judge_prompt.substr(0, slot));
  EXPECT_NE(seen.find(plan.knowledge_explanation), std::string::npos);
  EXPECT_NE(seen.find("Output your final verdict in the following format"), std::string::npos);
}

TEST(Cidpp, MissingSegmentAfterReask) {
  support::FunctionBackend backend([](const AgentConfig&, std::span<const ChatMessage>) {
    return std::string("[A]: 84; a\n[B]: 87; b\n[C]: 88; c\n[D]: 87; d");
  });
  const Agent judge{backend, AgentConfig::defaults_for(AgentRole::Judge)};
  EXPECT_EQ(kind_of([&] { cidpp_assess(judge, support::leveled_plan(0)); }),
            ErrorKind::VerdictParseError);
  EXPECT_EQ(backend.calls(), 2u);
}
