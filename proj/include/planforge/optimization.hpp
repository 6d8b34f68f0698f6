#pragma once

// Feedback-driven optimization over a bounded, score-sorted candidate queue.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "planforge/agent.hpp"
#include "planforge/analysis.hpp"
#include "planforge/config.hpp"
#include "planforge/domain.hpp"
#include "planforge/runlog.hpp"

namespace planforge {

struct QueueEntry {
  LessonPlan plan;
  double score = 0.0;
  std::uint64_t inserted_at = 0;
};

/// Entries ascending by (score, inserted_at); holds at most `capacity`
/// entries, keeping the highest-scoring tail. Ties favor the newer entry.
class CandidateQueue {
 public:
  /// Throws InvalidValue for capacity 0.
  explicit CandidateQueue(std::size_t capacity);

  std::size_t capacity() const noexcept { return capacity_; }
  const std::vector<QueueEntry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }
  std::uint64_t next_sequence() const noexcept { return next_sequence_; }

  /// Inserts one pair. Throws ScoreOutOfRange outside [0, 100].
  void insert(LessonPlan plan, double score);

  /// Inserts a batch with consecutive sequence numbers in batch order, then
  /// sorts and trims once.
  void merge(std::vector<std::pair<LessonPlan, double>> batch);

 private:
  void sort_and_trim();

  std::size_t capacity_;
  std::vector<QueueEntry> entries_;
  std::uint64_t next_sequence_ = 0;
};

CandidateQueue queue_update(CandidateQueue queue, LessonPlan plan, double score);

/// Throws EmptyQueue.
const QueueEntry& best_entry(const CandidateQueue& queue);
const LessonPlan& best_plan(const CandidateQueue& queue);

std::vector<QueueSnapshotEntry> snapshot(const CandidateQueue& queue);

struct Feedback {
  std::string advantages;
  std::string disadvantages;
};

struct CandidateSlot {
  int round = 1;
  int index = 1;  // 1-based
  int branching = 1;
};

std::string candidate_plan_id(int round, int index);

std::vector<ChatMessage> optimizer_messages(const SkillTree& tree, const CandidateQueue& queue,
                                            const Feedback& feedback, const CandidateSlot& slot);

std::vector<ChatMessage> initial_plan_messages(const std::string& topic, const SkillTree& tree);

/// Parses a generated plan; at least one example is required.
PlanBody parse_generated_plan(std::string_view text);

/// Round-0 plan written from the topic and the skill tree alone.
LessonPlan generate_initial_plan(const Agent& optimizer, const std::string& topic,
                                 const SkillTree& tree);

/// New plan whose parent is the queue maximum. Throws EmptyQueue, or
/// PlanParseError when the reply is unusable after one re-ask.
LessonPlan generate_candidate(const Agent& optimizer, const Feedback& feedback,
                              const CandidateQueue& queue, const SkillTree& tree,
                              const CandidateSlot& slot);

struct Team {
  Agent evaluator;
  Agent optimizer;
  Agent analyst;
};

Team make_team(Backend& backend, const RunConfig& config);

struct ExecutionOptions {
  std::size_t max_parallel = 4;
  std::function<void(const RoundRecord&)> on_round;
};

struct OptimizationOutcome {
  CandidateQueue queue;
  RunRecord record;
};

/// The evaluation set for a run: `count` questions sampled with `seed`,
/// kept in pool order. Sampling a pool of exactly `count` returns it as is.
std::vector<TestQuestion> evaluation_set(std::span<const TestQuestion> pool, std::size_t count,
                                         std::uint64_t seed);

/// Runs the full loop. Candidates that fail with a backend, parse or range
/// error are recorded as rejected; AuthError and ScriptMiss propagate.
OptimizationOutcome oaeo_run(const Team& team, const RunConfig& config,
                             const LessonPlan& initial_plan, bool initial_generated,
                             const SkillTree& tree, std::span<const TestQuestion> pool,
                             const MistakeDatabase& cmd, const ExecutionOptions& options = {});

/// Re-executes a recorded run against `backend` and returns the new record.
RunRecord replay_run(const RunRecord& record, Backend& backend,
                     const ExecutionOptions& options = {});

}  // namespace planforge
