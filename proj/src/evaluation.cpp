#include "planforge/evaluation.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "planforge/detail/parallel.hpp"
#include "planforge/util.hpp"

namespace planforge {

namespace {

[[noreturn]] void verdict_error(const std::string& message) {
  throw Error(ErrorKind::VerdictParseError, message);
}

// Value after "KEY:" on the first line that starts with it.
std::optional<std::string_view> find_field(std::string_view text, std::string_view key) {
  for (const auto line : split_lines(text)) {
    const auto trimmed = trim(line);
    if (trimmed.size() > key.size() && trimmed.substr(0, key.size()) == key &&
        trimmed[key.size()] == ':') {
      return trim(trimmed.substr(key.size() + 1));
    }
  }
  return std::nullopt;
}

std::string required_text_field(std::string_view text, std::string_view key) {
  const auto value = find_field(text, key);
  if (!value) verdict_error(fmt::format("missing {} line", key));
  if (value->empty()) verdict_error(fmt::format("{} line is empty", key));
  return std::string(*value);
}

// Accepts -?digits(.digits)? only; returns the number of characters used.
std::size_t scan_decimal(std::string_view text) {
  std::size_t i = 0;
  if (i < text.size() && text[i] == '-') ++i;
  const auto int_start = i;
  while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
  if (i == int_start) return 0;
  if (i < text.size() && text[i] == '.') {
    const auto frac_start = ++i;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
    if (i == frac_start) return 0;
  }
  return i;
}

double to_double(std::string_view digits) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
    verdict_error(fmt::format("'{}' is not a number", digits));
  }
  return value;
}

void check_points(double value, std::string_view what) {
  if (!(value >= 0.0 && value <= 100.0)) {
    throw Error(ErrorKind::ScoreOutOfRange,
                fmt::format("{} = {} outside [0, 100]", what, format_number(value)));
  }
}

std::string numbered(std::span<const QuestionVerdict> verdicts,
                     std::string QuestionVerdict::*field) {
  std::string out;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    out += fmt::format("{}. {}\n", i + 1, verdicts[i].*field);
  }
  return std::string(trim(out));
}

}  // namespace

QuestionVerdict parse_question_verdict(std::string_view text) {
  const auto score_text = find_field(text, "SCORE");
  if (!score_text) verdict_error("missing SCORE line");
  const auto digits = *score_text;
  std::size_t used = 0;
  if (!digits.empty() && digits.front() == '-') used = 1;
  while (used < digits.size() && digits[used] >= '0' && digits[used] <= '9') ++used;
  if (digits.empty() || used != digits.size() || (digits.front() == '-' && used == 1)) {
    verdict_error(fmt::format("SCORE '{}' is not an integer", digits));
  }
  long long score = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), score);
  if (ec != std::errc{}) {
    throw Error(ErrorKind::ScoreOutOfRange, fmt::format("SCORE '{}' outside [0, 100]", digits));
  }
  if (score < 0 || score > 100) {
    throw Error(ErrorKind::ScoreOutOfRange, fmt::format("SCORE {} outside [0, 100]", score));
  }
  QuestionVerdict verdict;
  verdict.score = static_cast<double>(score);
  verdict.advantage = required_text_field(text, "ADVANTAGE");
  verdict.disadvantage = required_text_field(text, "DISADVANTAGE");
  return verdict;
}

FeedbackSummary parse_feedback_summary(std::string_view text) {
  return {required_text_field(text, "ADVANTAGE"), required_text_field(text, "DISADVANTAGE")};
}

std::vector<ChatMessage> eaee_question_messages(const LessonPlan& plan, const SkillTree& tree,
                                                const TestQuestion& question) {
  const auto question_text = fmt::format("{}\nReference answer: {}", trim(question.statement),
                                         trim(question.reference_answer));
  const auto fragment = render_skill_tree_fragment(tree);
  const auto plan_text = render_plan_text(plan);
  const auto task = prompt_asset("evaluation_task");
  return {{MessageRole::System, prompt_asset("evaluator_system")},
          {MessageRole::User, render_template(prompt_asset("eaee_question"),
                                              {{"skill_tree", trim(fragment)},
                                               {"lesson_plan", trim(plan_text)},
                                               {"question", question_text},
                                               {"evaluation_task", task}})}};
}

std::vector<ChatMessage> eaee_summary_messages(std::span<const QuestionVerdict> verdicts) {
  const auto count = std::to_string(verdicts.size());
  const auto advantages = numbered(verdicts, &QuestionVerdict::advantage);
  const auto disadvantages = numbered(verdicts, &QuestionVerdict::disadvantage);
  return {{MessageRole::System, prompt_asset("evaluator_system")},
          {MessageRole::User, render_template(prompt_asset("eaee_summary"),
                                              {{"count", count},
                                               {"advantages", advantages},
                                               {"disadvantages", disadvantages}})}};
}

EvalResult make_eval_result(std::vector<double> scores, std::string advantages,
                            std::string disadvantages) {
  if (scores.empty()) throw Error(ErrorKind::EmptyQuestionSet, "no question scores");
  for (const double s : scores) check_points(s, "question score");
  const double mean =
      std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
  return EvalResult{mean, std::move(advantages), std::move(disadvantages), std::move(scores)};
}

EvalResult eaee_evaluate(const Agent& evaluator, const LessonPlan& plan, const SkillTree& tree,
                         std::span<const TestQuestion> questions,
                         const EvaluationOptions& options) {
  if (questions.empty()) throw Error(ErrorKind::EmptyQuestionSet, "no test questions to evaluate with");
  validate(plan);

  std::vector<QuestionVerdict> verdicts(questions.size());
  detail::parallel_for(questions.size(), options.max_parallel, [&](std::size_t i) {
    verdicts[i] = ask_parsed(evaluator, eaee_question_messages(plan, tree, questions[i]),
                             parse_question_verdict,
                             {ErrorKind::VerdictParseError, ErrorKind::ScoreOutOfRange});
  });

  auto summary = ask_parsed(evaluator, eaee_summary_messages(verdicts), parse_feedback_summary,
                            {ErrorKind::VerdictParseError});

  std::vector<double> scores;
  scores.reserve(verdicts.size());
  for (const auto& v : verdicts) scores.push_back(v.score);
  return make_eval_result(std::move(scores), std::move(summary.advantages),
                          std::move(summary.disadvantages));
}

CidppVerdict parse_cidpp_verdict(std::string_view text) {
  struct Marker {
    std::size_t start;  // position of '['
    std::size_t body;   // first character after ':'
    char label;
  };

  // Segments end at the next label marker or at an OVERALL line.
  std::optional<std::size_t> overall_pos;
  std::optional<double> overall;
  for (const auto line : split_lines(text)) {
    const auto trimmed = trim(line);
    if (trimmed.substr(0, 8) == "OVERALL:") {
      if (overall_pos) verdict_error("more than one OVERALL line");
      overall_pos = static_cast<std::size_t>(line.data() - text.data());
      const auto value = trim(trimmed.substr(8));
      if (value.empty() || scan_decimal(value) != value.size()) {
        verdict_error(fmt::format("OVERALL '{}' is not a number", value));
      }
      overall = to_double(value);
      check_points(*overall, "OVERALL");
    }
  }

  std::vector<Marker> markers;
  for (std::size_t i = 0; i + 2 < text.size(); ++i) {
    if (text[i] != '[' || text[i + 1] < 'A' || text[i + 1] > 'Z' || text[i + 2] != ']') continue;
    std::size_t j = i + 3;
    while (j < text.size() && (text[j] == ' ' || text[j] == '\t')) ++j;
    if (j < text.size() && text[j] == ':') markers.push_back({i, j + 1, text[i + 1]});
  }
  if (markers.empty()) verdict_error("no [A]..[E] segments found");

  CidppVerdict verdict;
  std::array<bool, 5> seen{};
  for (std::size_t m = 0; m < markers.size(); ++m) {
    const auto& marker = markers[m];
    if (marker.label > 'E') verdict_error(fmt::format("unexpected segment [{}]", marker.label));
    const auto index = static_cast<std::size_t>(marker.label - 'A');
    if (seen[index]) verdict_error(fmt::format("segment [{}] appears twice", marker.label));
    seen[index] = true;

    std::size_t end = m + 1 < markers.size() ? markers[m + 1].start : text.size();
    if (overall_pos && *overall_pos > marker.start && *overall_pos < end) end = *overall_pos;
    auto segment = text.substr(marker.body, end - marker.body);

    std::size_t i = 0;
    while (i < segment.size() && (segment[i] == ' ' || segment[i] == '\t')) ++i;
    const bool bracketed = i < segment.size() && segment[i] == '[';
    if (bracketed) ++i;
    const auto used = scan_decimal(segment.substr(i));
    if (used == 0) verdict_error(fmt::format("segment [{}] has no numeric points", marker.label));
    const double points = to_double(segment.substr(i, used));
    i += used;
    if (bracketed) {
      if (i >= segment.size() || segment[i] != ']') {
        verdict_error(fmt::format("segment [{}] has an unclosed bracket", marker.label));
      }
      ++i;
    }
    while (i < segment.size() && (segment[i] == ' ' || segment[i] == '\t')) ++i;
    if (i >= segment.size() || segment[i] != ';') {
      verdict_error(fmt::format("segment [{}] lacks ';' after its points", marker.label));
    }
    check_points(points, fmt::format("[{}]", marker.label));

    auto analysis = trim(segment.substr(i + 1));
    while (!analysis.empty() && (analysis.back() == ',' || analysis.back() == '"')) {
      analysis.remove_suffix(1);
      analysis = trim(analysis);
    }
    verdict.points[index] = points;
    verdict.analyses[index] = std::string(analysis);
  }
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (!seen[k]) verdict_error(fmt::format("missing segment [{}]", static_cast<char>('A' + k)));
  }
  verdict.overall = overall;
  return verdict;
}

std::string render_cidpp_verdict(const CidppVerdict& verdict) {
  std::string out;
  for (std::size_t k = 0; k < verdict.points.size(); ++k) {
    out += fmt::format("[{}]: {}; {}\n", static_cast<char>('A' + k), format_number(verdict.points[k]),
                       verdict.analyses[k]);
  }
  if (verdict.overall) out += fmt::format("OVERALL: {}\n", format_number(*verdict.overall));
  return out;
}

std::vector<ChatMessage> cidpp_judge_messages(const LessonPlan& plan) {
  const auto plan_text = render_plan_text(plan);
  return {{MessageRole::User,
           render_template(prompt_asset("cidpp_judge"), {{"lessonplan", trim(plan_text)}})}};
}

CidppScore cidpp_assess(const Agent& judge, const LessonPlan& plan, const CidppWeights& weights) {
  validate(plan);
  const auto verdict = ask_parsed(judge, cidpp_judge_messages(plan), parse_cidpp_verdict,
                                  {ErrorKind::VerdictParseError, ErrorKind::ScoreOutOfRange});
  return make_cidpp_score(verdict.points, weights, verdict.overall);
}

}  // namespace planforge
