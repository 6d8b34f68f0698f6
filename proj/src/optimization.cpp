#include "planforge/optimization.hpp"

#include <algorithm>
#include <optional>

#include <fmt/format.h>

#include "planforge/corpus.hpp"
#include "planforge/detail/parallel.hpp"
#include "planforge/evaluation.hpp"
#include "planforge/util.hpp"

namespace planforge {

namespace {

void check_score(double score) {
  if (!(score >= 0.0 && score <= 100.0)) {
    throw Error(ErrorKind::ScoreOutOfRange,
                fmt::format("queue score {} outside [0, 100]", format_number(score)));
  }
}

bool entry_less(const QueueEntry& a, const QueueEntry& b) {
  if (a.score != b.score) return a.score < b.score;
  return a.inserted_at < b.inserted_at;
}

std::string render_queue(const CandidateQueue& queue) {
  std::string out;
  for (const auto& entry : queue.entries()) {
    if (!out.empty()) out += "\n";
    out += fmt::format("### Lesson plan {} (score {})\n{}", entry.plan.id,
                       format_number(entry.score), trim(render_plan_text(entry.plan)));
  }
  return out;
}

// Errors that mean the run itself cannot continue, as opposed to one bad
// candidate.
bool fatal(ErrorKind kind) {
  return kind == ErrorKind::AuthError || kind == ErrorKind::ScriptMiss ||
         kind == ErrorKind::InvalidValue || kind == ErrorKind::InvariantViolation;
}

struct CandidateResult {
  std::string plan_id;
  std::optional<LessonPlan> plan;
  std::optional<EvalResult> eval;
  std::vector<std::string> warnings;
  std::string reason;
};

}  // namespace

CandidateQueue::CandidateQueue(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error(ErrorKind::InvalidValue, "queue capacity must be at least 1");
}

void CandidateQueue::insert(LessonPlan plan, double score) {
  check_score(score);
  entries_.push_back({std::move(plan), score, next_sequence_++});
  sort_and_trim();
}

void CandidateQueue::merge(std::vector<std::pair<LessonPlan, double>> batch) {
  for (const auto& [plan, score] : batch) check_score(score);
  for (auto& [plan, score] : batch) entries_.push_back({std::move(plan), score, next_sequence_++});
  sort_and_trim();
}

void CandidateQueue::sort_and_trim() {
  std::sort(entries_.begin(), entries_.end(), entry_less);
  if (entries_.size() > capacity_) {
    entries_.erase(entries_.begin(),
                   entries_.begin() + static_cast<std::ptrdiff_t>(entries_.size() - capacity_));
  }
}

CandidateQueue queue_update(CandidateQueue queue, LessonPlan plan, double score) {
  queue.insert(std::move(plan), score);
  return queue;
}

const QueueEntry& best_entry(const CandidateQueue& queue) {
  if (queue.empty()) throw Error(ErrorKind::EmptyQueue, "candidate queue is empty");
  return queue.entries().back();
}

const LessonPlan& best_plan(const CandidateQueue& queue) { return best_entry(queue).plan; }

std::vector<QueueSnapshotEntry> snapshot(const CandidateQueue& queue) {
  std::vector<QueueSnapshotEntry> out;
  for (const auto& e : queue.entries()) out.push_back({e.plan.id, e.score, e.inserted_at});
  return out;
}

std::string candidate_plan_id(int round, int index) {
  return fmt::format("plan-r{}-c{}", round, index);
}

std::vector<ChatMessage> optimizer_messages(const SkillTree& tree, const CandidateQueue& queue,
                                            const Feedback& feedback, const CandidateSlot& slot) {
  const auto fragment = render_skill_tree_fragment(tree);
  const auto queue_text = render_queue(queue);
  const auto candidate = std::to_string(slot.index);
  const auto branching = std::to_string(slot.branching);
  const auto round = std::to_string(slot.round);
  const auto task = prompt_asset("optimization_task");
  const auto format = prompt_asset("plan_format");
  return {{MessageRole::System, prompt_asset("optimizer_system")},
          {MessageRole::User, render_template(prompt_asset("optimizer_generate"),
                                              {{"skill_tree", trim(fragment)},
                                               {"optimization_task", task},
                                               {"queue", queue_text},
                                               {"advantages", trim(feedback.advantages)},
                                               {"disadvantages", trim(feedback.disadvantages)},
                                               {"candidate", candidate},
                                               {"branching", branching},
                                               {"round", round},
                                               {"plan_format", format}})}};
}

std::vector<ChatMessage> initial_plan_messages(const std::string& topic, const SkillTree& tree) {
  const auto fragment = render_skill_tree_fragment(tree);
  const auto format = prompt_asset("plan_format");
  return {{MessageRole::System, prompt_asset("optimizer_system")},
          {MessageRole::User, render_template(prompt_asset("initial_generate"),
                                              {{"skill_tree", trim(fragment)},
                                               {"topic", topic},
                                               {"plan_format", format}})}};
}

PlanBody parse_generated_plan(std::string_view text) {
  auto body = parse_plan_text(text);
  if (body.examples.empty()) {
    throw Error(ErrorKind::PlanParseError, "the lesson plan has no EXAMPLE section");
  }
  return body;
}

LessonPlan generate_initial_plan(const Agent& optimizer, const std::string& topic,
                                 const SkillTree& tree) {
  auto body = ask_parsed(optimizer, initial_plan_messages(topic, tree), parse_generated_plan,
                         {ErrorKind::PlanParseError});
  LessonPlan plan;
  plan.id = "plan-r0";
  plan.topic = topic;
  plan.knowledge_explanation = std::move(body.knowledge_explanation);
  plan.examples = std::move(body.examples);
  plan.round = 0;
  validate(plan);
  return plan;
}

LessonPlan generate_candidate(const Agent& optimizer, const Feedback& feedback,
                              const CandidateQueue& queue, const SkillTree& tree,
                              const CandidateSlot& slot) {
  const auto& parent = best_plan(queue);
  auto body = ask_parsed(optimizer, optimizer_messages(tree, queue, feedback, slot),
                         parse_generated_plan, {ErrorKind::PlanParseError});
  LessonPlan plan;
  plan.id = candidate_plan_id(slot.round, slot.index);
  plan.topic = parent.topic;
  plan.knowledge_explanation = std::move(body.knowledge_explanation);
  plan.examples = std::move(body.examples);
  plan.parent_id = parent.id;
  plan.round = parent.round + 1;
  validate(plan);
  return plan;
}

Team make_team(Backend& backend, const RunConfig& config) {
  return Team{Agent{backend, config.evaluator}, Agent{backend, config.optimizer},
              Agent{backend, config.analyst}};
}

std::vector<TestQuestion> evaluation_set(std::span<const TestQuestion> pool, std::size_t count,
                                         std::uint64_t seed) {
  auto indices = sample_indices(pool.size(), count, seed);
  std::sort(indices.begin(), indices.end());
  std::vector<TestQuestion> out;
  out.reserve(indices.size());
  for (const auto i : indices) out.push_back(pool[i]);
  return out;
}

OptimizationOutcome oaeo_run(const Team& team, const RunConfig& config,
                             const LessonPlan& initial_plan, bool initial_generated,
                             const SkillTree& tree, std::span<const TestQuestion> pool,
                             const MistakeDatabase& cmd, const ExecutionOptions& options) {
  validate(config);
  validate(initial_plan);
  if (initial_plan.parent_id || initial_plan.round != 0) {
    throw Error(ErrorKind::InvalidValue, "the initial plan must be a round-0 plan without a parent");
  }
  const auto& opt = config.optimize;
  const auto questions =
      evaluation_set(pool, static_cast<std::size_t>(opt.questions_per_eval), opt.seed);

  const EvaluationOptions eval_options{options.max_parallel};
  AnalysisOptions analysis_options;
  analysis_options.weak_threshold = config.weak_threshold;
  analysis_options.max_parallel = options.max_parallel;

  RunRecord record{
      .config = config,
      .tree = tree,
      .questions = questions,
      .mistakes = cmd,
      .initial_generated = initial_generated,
      .initial_plan_id = initial_plan.id,
  };

  const auto initial_eval =
      eaee_evaluate(team.evaluator, initial_plan, tree, questions, eval_options);
  record.initial_score = initial_eval.post_score;
  record.plans.emplace(initial_plan.id, initial_plan);
  record.evaluations.emplace(initial_plan.id, initial_eval);

  CandidateQueue queue(static_cast<std::size_t>(opt.capacity));
  queue.insert(initial_plan, initial_eval.post_score);

  const auto branching = static_cast<std::size_t>(opt.branching);
  for (int round = 1; round <= opt.rounds; ++round) {
    const auto& parent = best_entry(queue);
    const auto& parent_eval = record.evaluations.at(parent.plan.id);
    const Feedback feedback{parent_eval.advantages, parent_eval.disadvantages};

    std::vector<CandidateResult> results(branching);
    detail::parallel_for(branching, options.max_parallel, [&](std::size_t k) {
      auto& result = results[k];
      const CandidateSlot slot{round, static_cast<int>(k + 1), opt.branching};
      result.plan_id = candidate_plan_id(round, slot.index);
      try {
        auto plan = generate_candidate(team.optimizer, feedback, queue, tree, slot);
        auto annotated = aaea_annotate(team.analyst, plan, cmd, tree, analysis_options);
        auto eval = eaee_evaluate(team.evaluator, annotated.plan, tree, questions, eval_options);
        result.plan = std::move(annotated.plan);
        result.eval = std::move(eval);
        result.warnings = std::move(annotated.warnings);
      } catch (const Error& e) {
        if (fatal(e.kind())) throw;
        result.reason = e.what();
      }
    });

    RoundRecord round_record;
    round_record.round = round;
    round_record.parent_id = parent.plan.id;
    std::vector<std::pair<LessonPlan, double>> batch;
    for (auto& result : results) {
      CandidateRecord candidate{result.plan_id, CandidateStatus::Rejected, std::nullopt,
                                result.reason};
      if (result.plan) {
        const double score = result.eval->post_score;
        candidate.status = CandidateStatus::Accepted;
        candidate.score = score;
        for (auto& warning : result.warnings) {
          record.warnings.push_back(fmt::format("{}: {}", result.plan_id, warning));
        }
        record.plans.emplace(result.plan_id, *result.plan);
        record.evaluations.emplace(result.plan_id, std::move(*result.eval));
        batch.emplace_back(std::move(*result.plan), score);
      }
      round_record.candidates.push_back(std::move(candidate));
    }
    round_record.aborted = batch.empty();
    queue.merge(std::move(batch));
    round_record.queue = snapshot(queue);
    round_record.best_score = best_entry(queue).score;
    record.rounds.push_back(std::move(round_record));
    if (options.on_round) options.on_round(record.rounds.back());
  }

  record.final_queue = snapshot(queue);
  validate(record);
  return OptimizationOutcome{std::move(queue), std::move(record)};
}

RunRecord replay_run(const RunRecord& record, Backend& backend, const ExecutionOptions& options) {
  const auto team = make_team(backend, record.config);
  const auto initial = record.initial_generated
                           ? generate_initial_plan(team.optimizer, record.config.topic, record.tree)
                           : record.plans.at(record.initial_plan_id);
  return oaeo_run(team, record.config, initial, record.initial_generated, record.tree,
                  record.questions, record.mistakes, options)
      .record;
}

}  // namespace planforge
