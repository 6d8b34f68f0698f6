#pragma once

// Expert evaluation of lesson plans: per-question score prediction averaged
// into a post score with summarized feedback, and the five-dimension rubric
// judge used for final reporting.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "planforge/agent.hpp"
#include "planforge/domain.hpp"

namespace planforge {

inline constexpr std::size_t kDefaultQuestionsPerEval = 5;

struct QuestionVerdict {
  double score = 0.0;
  std::string advantage;
  std::string disadvantage;

  bool operator==(const QuestionVerdict&) const = default;
};

/// Reads the SCORE / ADVANTAGE / DISADVANTAGE lines in any order; the first
/// occurrence of each wins. SCORE must be an integer in [0, 100].
/// Throws VerdictParseError or ScoreOutOfRange.
QuestionVerdict parse_question_verdict(std::string_view text);

struct FeedbackSummary {
  std::string advantages;
  std::string disadvantages;
};

/// Reads the ADVANTAGE / DISADVANTAGE lines of a summary reply.
FeedbackSummary parse_feedback_summary(std::string_view text);

std::vector<ChatMessage> eaee_question_messages(const LessonPlan& plan, const SkillTree& tree,
                                                const TestQuestion& question);
std::vector<ChatMessage> eaee_summary_messages(std::span<const QuestionVerdict> verdicts);

struct EvaluationOptions {
  std::size_t max_parallel = 4;
};

/// Scores the plan once per question, averages the scores into the post
/// score and merges the per-question feedback with one summary call.
/// Throws EmptyQuestionSet, VerdictParseError (after one re-ask) or any
/// backend error.
EvalResult eaee_evaluate(const Agent& evaluator, const LessonPlan& plan, const SkillTree& tree,
                         std::span<const TestQuestion> questions,
                         const EvaluationOptions& options = {});

/// Builds an EvalResult whose post score is the mean of `scores`.
EvalResult make_eval_result(std::vector<double> scores, std::string advantages,
                            std::string disadvantages);

/// Parsed rubric verdict: points and short analysis for labels A..E, plus an
/// optional "OVERALL: n" line.
struct CidppVerdict {
  std::array<double, 5> points{};
  std::array<std::string, 5> analyses;
  std::optional<double> overall;

  bool operator==(const CidppVerdict&) const = default;
};

/// Extracts "[A]: points; analysis" ... "[E]: ..." segments bound by label,
/// in any order and across line breaks. Points may be bracketed. Throws
/// VerdictParseError for missing, repeated or malformed segments and
/// ScoreOutOfRange for points outside [0, 100].
CidppVerdict parse_cidpp_verdict(std::string_view text);

/// Inverse of parse_cidpp_verdict, one segment per line.
std::string render_cidpp_verdict(const CidppVerdict& verdict);

std::vector<ChatMessage> cidpp_judge_messages(const LessonPlan& plan);

CidppScore cidpp_assess(const Agent& judge, const LessonPlan& plan,
                        const CidppWeights& weights = {});

}  // namespace planforge
