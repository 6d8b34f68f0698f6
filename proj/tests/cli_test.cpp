#include <gtest/gtest.h>

#include <fstream>
#include <regex>
#include <sstream>

#include "planforge/backend.hpp"
#include "planforge/cli.hpp"
#include "planforge/runlog.hpp"
#include "support.hpp"

using namespace planforge;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = execute(args, out, err);
  return {code, out.str(), err.str()};
}

std::string field(const std::string& text, const std::string& label) {
  const std::regex re(label + R"(:\s*(\S+))");
  std::smatch m;
  if (!std::regex_search(text, m, re)) return {};
  return m[1];
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    script_ = dir_.file("script.json");
    save_script(support::fallback_script(), script_);
    plan_ = dir_.file("plan.json");
    std::ofstream(plan_) << nlohmann::json(support::leveled_plan(0)).dump(2);
  }

  std::vector<std::string> scripted(std::vector<std::string> args) const {
    args.insert(args.end(), {"--backend", "scripted", "--script", script_});
    return args;
  }

  support::TempDir dir_;
  std::string script_;
  std::string plan_;
};

}  // namespace

TEST_F(CliTest, OptimizeWritesRunDirectory) {
  const auto r = run(scripted({"optimize", "--rounds", "2", "--branching", "2", "--capacity", "3",
                               "--questions", "3", "--seed", "5", "--out", dir_.file("runs")}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::filesystem::path run_dir = field(r.out, "run directory");
  EXPECT_TRUE(std::filesystem::exists(run_dir / "run.json"));
  EXPECT_TRUE(std::filesystem::exists(run_dir / "curve.csv"));
  EXPECT_TRUE(std::filesystem::exists(run_dir / "best_plan.json"));
  const auto loaded = load_run(run_dir / "run.json");
  EXPECT_EQ(loaded.stored_digest, field(r.out, "digest"));
  EXPECT_TRUE(loaded.record.initial_generated);
  EXPECT_EQ(loaded.record.rounds.size(), 2u);
}

TEST_F(CliTest, IdenticalRunsShareDigestAndReplay) {
  const std::vector<std::string> common = {"optimize", "--plan", plan_, "--rounds", "2",
                                           "--branching", "3", "--questions", "4", "--seed", "8"};
  auto args_a = common;
  args_a.insert(args_a.end(), {"--out", dir_.file("a")});
  auto args_b = common;
  args_b.insert(args_b.end(), {"--out", dir_.file("b"), "--parallel", "1"});
  const auto a = run(scripted(args_a));
  const auto b = run(scripted(args_b));
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(field(a.out, "digest"), field(b.out, "digest"));
  EXPECT_FALSE(field(a.out, "digest").empty());

  const auto replay = run(scripted({"replay", "--run", field(a.out, "run directory")}));
  EXPECT_EQ(replay.code, 0) << replay.err;
  EXPECT_NE(replay.out.find("replay matches"), std::string::npos);
}

TEST_F(CliTest, ReplayDetectsDifferentResponses) {
  const auto a = run(scripted({"optimize", "--plan", plan_, "--rounds", "1", "--questions", "2",
                               "--out", dir_.file("a")}));
  ASSERT_EQ(a.code, 0) << a.err;
  auto other = support::fallback_script();
  other.set_fallbacks(AgentRole::Evaluator,
                      {"SCORE: 12\nADVANTAGE: Short.\nDISADVANTAGE: Wrong answers."});
  const auto other_path = dir_.file("other.json");
  save_script(other, other_path);
  const auto replay = run({"replay", "--run", field(a.out, "run directory"), "--backend", "scripted",
                           "--script", other_path});
  EXPECT_EQ(replay.code, kExitRuntimeError);
}

TEST_F(CliTest, AssessPrintsRubric) {
  const auto r = run(scripted({"assess", "--plan", plan_}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Clarity: 84.1\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("Integrity: 87.5\n"), std::string::npos);
  EXPECT_NE(r.out.find("Depth: 88.9\n"), std::string::npos);
  EXPECT_NE(r.out.find("Practicality: 87.8\n"), std::string::npos);
  EXPECT_NE(r.out.find("Pertinence: 83.7\n"), std::string::npos);
  EXPECT_NE(r.out.find("Aggregate: 86.4\n"), std::string::npos);
}

TEST_F(CliTest, EvaluateAndAnnotate) {
  const auto e = run(scripted({"evaluate", "--plan", plan_, "--questions", "2"}));
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_NE(e.out.find("Post score: "), std::string::npos);

  const auto out_path = dir_.file("annotated.json");
  const auto a = run(scripted({"annotate", "--plan", plan_, "--out", out_path}));
  ASSERT_EQ(a.code, 0) << a.err;
  std::ifstream in(out_path);
  const auto plan = lesson_plan_from_json(nlohmann::json::parse(in));
  for (const auto& example : plan.examples) EXPECT_EQ(example.error_points.size(), 3u);
}

TEST_F(CliTest, SkilltreeAndReport) {
  const auto s = run({"skilltree"});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_NE(s.out.find("Weak-ability tags:"), std::string::npos);

  const auto r = run({"report"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("GPT-4 | 52.9 | 61.7 | 42.0 | 54.4 | 31.0 | 49"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("Ae+Ao+Aa | 84.9 | 75.1 | 75.9 | 85.1 | 82.1 | 79"), std::string::npos);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({"optimize", "--unknown-flag"}).code, kExitUsageError);
  EXPECT_EQ(run({"evaluate"}).code, kExitUsageError);
  EXPECT_EQ(run({"optimize", "--backend", "scripted"}).code, kExitUsageError);
  EXPECT_EQ(run({"optimize", "--backend", "carrier-pigeon"}).code, kExitUsageError);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsageError);
  const auto r = run(scripted({"optimize", "--branching", "0"}));
  EXPECT_NE(r.code, kExitOk);
}

TEST_F(CliTest, RuntimeErrorsExitOne) {
  const auto bad_plan = dir_.file("bad.json");
  std::ofstream(bad_plan) << "{\"id\": 3}";
  const auto r = run(scripted({"assess", "--plan", bad_plan}));
  EXPECT_EQ(r.code, kExitRuntimeError);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}
