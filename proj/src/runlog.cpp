#include "planforge/runlog.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>

#include <fmt/format.h>

#include "planforge/error.hpp"
#include "planforge/util.hpp"

namespace planforge {

using nlohmann::json;

namespace {

constexpr std::string_view kRunFormat = "planforge-run-v1";

[[noreturn]] void invalid_record(const std::string& message) {
  throw Error(ErrorKind::ValidationError, message);
}

json snapshot_json(const std::vector<QueueSnapshotEntry>& entries) {
  json out = json::array();
  for (const auto& e : entries) {
    out.push_back({{"plan_id", e.plan_id}, {"score", e.score}, {"inserted_at", e.inserted_at}});
  }
  return out;
}

std::vector<QueueSnapshotEntry> snapshot_from_json(const json& j) {
  std::vector<QueueSnapshotEntry> out;
  for (const auto& e : j) {
    out.push_back({e.at("plan_id").get<std::string>(), e.at("score").get<double>(),
                   e.at("inserted_at").get<std::uint64_t>()});
  }
  return out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", tm.tm_year + 1900, tm.tm_mon + 1,
                     tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
}

void check_queue(const RunRecord& record, const std::vector<QueueSnapshotEntry>& queue,
                 std::string_view where) {
  const auto capacity = static_cast<std::size_t>(record.config.optimize.capacity);
  if (queue.empty()) invalid_record(fmt::format("{}: queue is empty", where));
  if (queue.size() > capacity) {
    invalid_record(fmt::format("{}: queue holds {} entries, capacity {}", where, queue.size(), capacity));
  }
  for (std::size_t i = 0; i < queue.size(); ++i) {
    if (!record.plans.contains(queue[i].plan_id)) {
      invalid_record(fmt::format("{}: queue references unknown plan '{}'", where, queue[i].plan_id));
    }
    if (i > 0) {
      const auto& a = queue[i - 1];
      const auto& b = queue[i];
      if (a.score > b.score || (a.score == b.score && a.inserted_at >= b.inserted_at)) {
        invalid_record(fmt::format("{}: queue is not in ascending order", where));
      }
    }
  }
}

}  // namespace

void validate(const RunRecord& record) {
  for (const auto& [id, plan] : record.plans) {
    if (id != plan.id) invalid_record(fmt::format("plan stored under '{}' has id '{}'", id, plan.id));
    try {
      validate(plan);
    } catch (const Error& e) {
      invalid_record(e.what());
    }
    if (plan.parent_id && !record.plans.contains(*plan.parent_id)) {
      invalid_record(fmt::format("plan '{}' has unknown parent '{}'", id, *plan.parent_id));
    }
  }
  if (!record.plans.contains(record.initial_plan_id)) {
    invalid_record(fmt::format("initial plan '{}' is missing", record.initial_plan_id));
  }
  for (const auto& [id, eval] : record.evaluations) {
    if (!record.plans.contains(id)) invalid_record(fmt::format("evaluation for unknown plan '{}'", id));
  }
  if (record.rounds.size() != static_cast<std::size_t>(record.config.optimize.rounds)) {
    invalid_record(fmt::format("record has {} rounds, config says {}", record.rounds.size(),
                               record.config.optimize.rounds));
  }
  for (std::size_t r = 0; r < record.rounds.size(); ++r) {
    const auto& round = record.rounds[r];
    const auto where = fmt::format("round {}", round.round);
    if (round.round != static_cast<int>(r + 1)) invalid_record(where + ": rounds out of order");
    if (!record.plans.contains(round.parent_id)) {
      invalid_record(fmt::format("{}: unknown parent plan '{}'", where, round.parent_id));
    }
    for (const auto& c : round.candidates) {
      if (c.status == CandidateStatus::Accepted) {
        if (!record.plans.contains(c.plan_id) || !c.score) {
          invalid_record(fmt::format("{}: accepted candidate '{}' is not recorded", where, c.plan_id));
        }
      } else if (c.reason.empty()) {
        invalid_record(fmt::format("{}: rejected candidate '{}' has no reason", where, c.plan_id));
      }
    }
    check_queue(record, round.queue, where);
    if (round.best_score != round.queue.back().score) {
      invalid_record(where + ": best_score does not match the queue maximum");
    }
  }
  check_queue(record, record.final_queue, "final queue");
}

json to_json(const RunRecord& record) {
  json rounds = json::array();
  for (const auto& round : record.rounds) {
    json candidates = json::array();
    for (const auto& c : round.candidates) {
      candidates.push_back({{"plan_id", c.plan_id},
                            {"status", c.status == CandidateStatus::Accepted ? "accepted" : "rejected"},
                            {"score", c.score ? json(*c.score) : json(nullptr)},
                            {"reason", c.reason}});
    }
    rounds.push_back({{"round", round.round},
                      {"parent_id", round.parent_id},
                      {"candidates", candidates},
                      {"queue", snapshot_json(round.queue)},
                      {"best_score", round.best_score},
                      {"aborted", round.aborted}});
  }
  json plans = json::object();
  for (const auto& [id, plan] : record.plans) plans[id] = plan;
  json evaluations = json::object();
  for (const auto& [id, eval] : record.evaluations) evaluations[id] = eval;
  return json{{"config", to_json(record.config)},
              {"tree", record.tree},
              {"questions", record.questions},
              {"mistakes", to_json(record.mistakes)},
              {"initial",
               {{"generated", record.initial_generated},
                {"plan_id", record.initial_plan_id},
                {"score", record.initial_score}}},
              {"rounds", rounds},
              {"final_queue", snapshot_json(record.final_queue)},
              {"plans", plans},
              {"evaluations", evaluations},
              {"warnings", record.warnings}};
}

RunRecord run_record_from_json(const json& j) {
  try {
    std::vector<TestQuestion> questions;
    for (const auto& q : j.at("questions")) questions.push_back(test_question_from_json(q));
    RunRecord record{
        .config = run_config_from_json(j.at("config")),
        .tree = skill_tree_from_json(j.at("tree")),
        .questions = std::move(questions),
        .mistakes = parse_cmd(j.at("mistakes").dump()),
        .initial_generated = j.at("initial").at("generated").get<bool>(),
        .initial_plan_id = j.at("initial").at("plan_id").get<std::string>(),
        .initial_score = j.at("initial").at("score").get<double>(),
    };
    for (const auto& r : j.at("rounds")) {
      RoundRecord round;
      round.round = r.at("round").get<int>();
      round.parent_id = r.at("parent_id").get<std::string>();
      for (const auto& c : r.at("candidates")) {
        CandidateRecord candidate;
        candidate.plan_id = c.at("plan_id").get<std::string>();
        const auto status = c.at("status").get<std::string>();
        if (status != "accepted" && status != "rejected") {
          throw Error(ErrorKind::ParseError, fmt::format("unknown candidate status '{}'", status));
        }
        candidate.status = status == "accepted" ? CandidateStatus::Accepted : CandidateStatus::Rejected;
        if (!c.at("score").is_null()) candidate.score = c.at("score").get<double>();
        candidate.reason = c.at("reason").get<std::string>();
        round.candidates.push_back(std::move(candidate));
      }
      round.queue = snapshot_from_json(r.at("queue"));
      round.best_score = r.at("best_score").get<double>();
      round.aborted = r.at("aborted").get<bool>();
      record.rounds.push_back(std::move(round));
    }
    record.final_queue = snapshot_from_json(j.at("final_queue"));
    for (const auto& [id, plan] : j.at("plans").items()) {
      record.plans.emplace(id, lesson_plan_from_json(plan));
    }
    for (const auto& [id, eval] : j.at("evaluations").items()) {
      record.evaluations.emplace(id, eval_result_from_json(eval));
    }
    record.warnings = j.at("warnings").get<std::vector<std::string>>();
    return record;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, fmt::format("malformed run record: {}", e.what()));
  }
}

std::string run_digest(const RunRecord& record) { return sha256_hex(to_json(record).dump()); }

void record_run(const RunRecord& record, const std::filesystem::path& path) {
  validate(record);
  nlohmann::ordered_json doc;
  doc["format"] = kRunFormat;
  doc["digest"] = run_digest(record);
  doc["written_at"] = utc_timestamp();
  doc["record"] = nlohmann::ordered_json::parse(to_json(record).dump());
  write_file(path.string(), doc.dump(2) + "\n");
}

LoadedRun load_run(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path.string()));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, fmt::format("{} is not valid JSON: {}", path.string(), e.what()));
  }
  if (!doc.is_object() || doc.value("format", "") != kRunFormat) {
    throw Error(ErrorKind::ParseError, fmt::format("{} is not a run file", path.string()));
  }
  LoadedRun loaded{run_record_from_json(doc.at("record")), doc.value("digest", "")};
  if (run_digest(loaded.record) != loaded.stored_digest) {
    invalid_record(fmt::format("{}: stored digest does not match its record", path.string()));
  }
  validate(loaded.record);
  return loaded;
}

std::vector<std::pair<int, double>> best_score_curve(const RunRecord& record) {
  std::vector<std::pair<int, double>> curve;
  curve.emplace_back(0, record.initial_score);
  for (const auto& round : record.rounds) curve.emplace_back(round.round, round.best_score);
  return curve;
}

std::string render_curve_csv(const RunRecord& record) {
  std::string out = "round,best_score\n";
  for (const auto& [round, score] : best_score_curve(record)) {
    out += fmt::format("{},{}\n", round, format_number(score));
  }
  return out;
}

const LessonPlan& final_best_plan(const RunRecord& record) {
  if (record.final_queue.empty()) throw Error(ErrorKind::EmptyQueue, "final queue is empty");
  return record.plans.at(record.final_queue.back().plan_id);
}

std::filesystem::path write_run_directory(const RunRecord& record,
                                          const std::filesystem::path& root) {
  validate(record);
  const auto dir = root / ("run-" + run_digest(record).substr(0, 12));
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  record_run(record, dir / "run.json");
  write_file((dir / "curve.csv").string(), render_curve_csv(record));
  write_file((dir / "best_plan.json").string(), json(final_best_plan(record)).dump(2) + "\n");
  return dir;
}

ScoreTable parse_score_table(std::string_view json_text) {
  try {
    const auto doc = json::parse(json_text);
    ScoreTable table;
    table.title = doc.value("title", "");
    for (const auto& row : doc.at("rows")) {
      ScoreTableRow out;
      out.strategy = row.at("strategy").get<std::string>();
      out.dimensions = {row.at("clarity").get<double>(), row.at("integrity").get<double>(),
                        row.at("depth").get<double>(), row.at("practicality").get<double>(),
                        row.at("pertinence").get<double>()};
      out.score = row.at("score").get<double>();
      table.rows.push_back(std::move(out));
    }
    return table;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, fmt::format("malformed score table: {}", e.what()));
  }
}

ScoreTable load_score_table(const std::string& path) { return parse_score_table(read_file(path)); }

std::string render_score_table(const ScoreTable& table) {
  std::string out;
  if (!table.title.empty()) out += table.title + "\n";
  out += "Strategy | Clarity | Integrity | Depth | Practicality | Pertinence | Score\n";
  for (const auto& row : table.rows) {
    out += row.strategy;
    for (const double d : row.dimensions) out += fmt::format(" | {:.1f}", d);
    out += fmt::format(" | {}\n", format_number(row.score));
  }
  return out;
}

Report render_report(const RunRecord* record, const std::vector<ScoreTable>& fixtures) {
  Report report;
  for (std::size_t i = 0; i < fixtures.size(); ++i) {
    if (i > 0) report.tables += "\n";
    report.tables += render_score_table(fixtures[i]);
  }
  if (record != nullptr) report.curve_csv = render_curve_csv(*record);
  return report;
}

}  // namespace planforge
