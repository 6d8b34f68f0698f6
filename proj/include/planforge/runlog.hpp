#pragma once

// Run records: the full audit trail of one optimization run, its canonical
// on-disk form, and report rendering.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "planforge/analysis.hpp"
#include "planforge/config.hpp"
#include "planforge/domain.hpp"

namespace planforge {

enum class CandidateStatus { Accepted, Rejected };

struct CandidateRecord {
  std::string plan_id;
  CandidateStatus status = CandidateStatus::Accepted;
  std::optional<double> score;  // set for accepted candidates
  std::string reason;           // set for rejected candidates

  bool operator==(const CandidateRecord&) const = default;
};

struct QueueSnapshotEntry {
  std::string plan_id;
  double score = 0.0;
  std::uint64_t inserted_at = 0;

  bool operator==(const QueueSnapshotEntry&) const = default;
};

struct RoundRecord {
  int round = 0;
  std::string parent_id;  // queue maximum when the round's candidates were generated
  std::vector<CandidateRecord> candidates;
  std::vector<QueueSnapshotEntry> queue;  // after the round's merge, ascending
  double best_score = 0.0;
  bool aborted = false;  // every candidate was rejected

  bool operator==(const RoundRecord&) const = default;
};

struct RunRecord {
  RunConfig config;
  SkillTree tree;
  std::vector<TestQuestion> questions;  // the sampled evaluation set
  MistakeDatabase mistakes;
  bool initial_generated = false;
  std::string initial_plan_id;
  double initial_score = 0.0;
  std::vector<RoundRecord> rounds;
  std::vector<QueueSnapshotEntry> final_queue;
  std::map<std::string, LessonPlan> plans;
  std::map<std::string, EvalResult> evaluations;
  std::vector<std::string> warnings;

  bool operator==(const RunRecord&) const = default;
};

/// Referential and arithmetic checks. Throws ValidationError.
void validate(const RunRecord& record);

/// Canonical JSON of the digest-covered region (keys sorted, no timestamps).
nlohmann::json to_json(const RunRecord& record);
RunRecord run_record_from_json(const nlohmann::json& j);

/// SHA-256 of the compact canonical JSON.
std::string run_digest(const RunRecord& record);

/// Writes {"format", "digest", "record", "written_at"} to `path` after
/// validating the record. Only "record" is covered by the digest.
void record_run(const RunRecord& record, const std::filesystem::path& path);

struct LoadedRun {
  RunRecord record;
  std::string stored_digest;
};

/// Reads a run file back. Throws ParseError, or ValidationError when the
/// stored digest does not match the record.
LoadedRun load_run(const std::filesystem::path& path);

/// (round, best_score) pairs, round 0 first.
std::vector<std::pair<int, double>> best_score_curve(const RunRecord& record);

/// "round,best_score" header plus one row per round, round 0 included.
std::string render_curve_csv(const RunRecord& record);

const LessonPlan& final_best_plan(const RunRecord& record);

/// Writes run.json, curve.csv and best_plan.json under root/<run-id>/ and
/// returns that directory. The run id is derived from the digest.
std::filesystem::path write_run_directory(const RunRecord& record,
                                          const std::filesystem::path& root);

struct ScoreTableRow {
  std::string strategy;
  std::array<double, 5> dimensions{};
  double score = 0.0;
};

struct ScoreTable {
  std::string title;
  std::vector<ScoreTableRow> rows;
};

ScoreTable parse_score_table(std::string_view json_text);
ScoreTable load_score_table(const std::string& path);

/// Pipe-separated table; dimensions with one decimal, score as an integer.
std::string render_score_table(const ScoreTable& table);

struct Report {
  std::string tables;
  std::string curve_csv;  // empty when no run was given
};

Report render_report(const RunRecord* record, const std::vector<ScoreTable>& fixtures);

}  // namespace planforge
