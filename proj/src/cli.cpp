#include "planforge/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <memory>
#include <optional>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "planforge/analysis.hpp"
#include "planforge/assets.hpp"
#include "planforge/backend.hpp"
#include "planforge/config.hpp"
#include "planforge/corpus.hpp"
#include "planforge/error.hpp"
#include "planforge/evaluation.hpp"
#include "planforge/optimization.hpp"
#include "planforge/runlog.hpp"
#include "planforge/util.hpp"

namespace planforge {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  std::string backend = "http";
  std::string script_path;
  std::string record_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> rounds;
  std::optional<int> branching;
  std::optional<int> capacity;
  std::optional<int> questions;
  std::string corpus;
  std::string format;
  std::string out;
  std::string plan_path;
  std::string tree_path;
  std::string mistakes_path;
  std::optional<std::string> topic;
  std::string run_path;
  std::vector<std::string> fixtures;
  std::size_t parallel = 4;
};

// Backend selected by --backend, optionally wrapped by a recorder.
class BackendSession {
 public:
  BackendSession(const Options& options, std::ostream& err) : record_path_(options.record_path) {
    if (options.backend == "scripted") {
      if (options.script_path.empty()) throw UsageError("--backend scripted requires --script");
      base_ = std::make_unique<ScriptedBackend>(load_script(options.script_path));
    } else if (options.backend == "http") {
      HttpBackend::Options http;
      http.log = [&err](std::string_view line) { err << line << "\n"; };
      base_ = std::make_unique<HttpBackend>(std::move(http));
    } else {
      throw UsageError(fmt::format("unknown backend '{}'", options.backend));
    }
    if (!record_path_.empty()) recorder_ = std::make_unique<RecordingBackend>(*base_);
  }

  Backend& get() { return recorder_ ? static_cast<Backend&>(*recorder_) : *base_; }

  void save() const {
    if (recorder_) save_script(recorder_->script(), record_path_);
  }

 private:
  std::string record_path_;
  std::unique_ptr<Backend> base_;
  std::unique_ptr<RecordingBackend> recorder_;
};

json read_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, fmt::format("{} is not valid JSON: {}", path, e.what()));
  }
}

struct Setup {
  RunConfig config;
  SkillTree tree;
  std::string corpus;
  std::string format;
  std::size_t parallel;
};

// Defaults, then the config file, then flags.
Setup resolve(const Options& options) {
  RunConfig config;
  json file = json::object();
  if (!options.config_path.empty()) {
    file = read_json(options.config_path);
    config = run_config_from_json(file, config);
  }
  auto& o = config.optimize;
  if (options.rounds) o.rounds = *options.rounds;
  if (options.branching) o.branching = *options.branching;
  if (options.capacity) o.capacity = *options.capacity;
  if (options.questions) o.questions_per_eval = *options.questions;
  if (options.seed) o.seed = *options.seed;
  if (options.topic) config.topic = *options.topic;

  auto tree = skill_tree_from_json(options.tree_path.empty()
                                       ? json::parse(bundled_asset("data/default_skill_tree.json"))
                                       : read_json(options.tree_path));
  const bool explicit_topic = options.topic || file.contains("topic");
  if (!options.tree_path.empty() && !explicit_topic) {
    config.topic = tree.topic();
  } else if (tree.topic() != config.topic) {
    tree = SkillTree(config.topic, tree.abilities());
  }
  validate(config);

  std::string corpus = options.corpus.empty() ? file.value("corpus", std::string()) : options.corpus;
  std::string format = options.format.empty() ? file.value("format", std::string()) : options.format;
  if (format.empty()) {
    format = corpus.empty() || fs::path(corpus).extension() != ".jsonl" ? "algebra" : "gsm8k";
  }
  const auto parallel = file.value("parallelism", options.parallel);
  return Setup{std::move(config), std::move(tree), std::move(corpus), std::move(format),
               std::max<std::size_t>(1, parallel)};
}

std::vector<TestQuestion> load_pool(const Setup& setup) {
  const auto format = corpus_format_from_string(setup.format);
  if (setup.corpus.empty()) {
    const auto* name = format == CorpusFormat::Gsm8k ? "corpus/gsm8k_sample.jsonl"
                                                     : "corpus/algebra_sample.json";
    return parse_questions(bundled_asset(name), format);
  }
  return load_questions(setup.corpus, format);
}

MistakeDatabase load_mistakes(const Options& options) {
  return options.mistakes_path.empty() ? load_bundled_cmd() : load_cmd(options.mistakes_path);
}

LessonPlan load_plan(const std::string& path) { return lesson_plan_from_json(read_json(path)); }

fs::path run_file(const std::string& path) {
  const fs::path p(path);
  return fs::is_directory(p) ? p / "run.json" : p;
}

int cmd_optimize(const Options& options, std::ostream& out, std::ostream& err) {
  const auto setup = resolve(options);
  const auto pool = load_pool(setup);
  const auto cmd = load_mistakes(options);
  BackendSession session(options, err);
  const auto team = make_team(session.get(), setup.config);

  const bool generated = options.plan_path.empty();
  const auto initial = generated ? generate_initial_plan(team.optimizer, setup.config.topic, setup.tree)
                                 : load_plan(options.plan_path);
  ExecutionOptions exec;
  exec.max_parallel = setup.parallel;
  exec.on_round = [&err](const RoundRecord& round) {
    err << fmt::format("round {}: best score {}{}\n", round.round, format_number(round.best_score),
                       round.aborted ? " (all candidates rejected)" : "");
  };
  const auto outcome = oaeo_run(team, setup.config, initial, generated, setup.tree, pool, cmd, exec);
  session.save();

  const auto dir = write_run_directory(outcome.record, options.out.empty() ? "runs" : options.out);
  out << fmt::format("run directory: {}\n", dir.string());
  out << fmt::format("digest: {}\n", run_digest(outcome.record));
  out << fmt::format("best plan: {} (score {})\n", best_plan(outcome.queue).id,
                     format_number(best_entry(outcome.queue).score));
  return kExitOk;
}

int cmd_evaluate(const Options& options, std::ostream& out, std::ostream& err) {
  const auto setup = resolve(options);
  const auto pool = load_pool(setup);
  const auto questions = evaluation_set(
      pool, static_cast<std::size_t>(setup.config.optimize.questions_per_eval),
      setup.config.optimize.seed);
  const auto plan = load_plan(options.plan_path);
  BackendSession session(options, err);
  const Agent evaluator{session.get(), setup.config.evaluator};
  const auto result = eaee_evaluate(evaluator, plan, setup.tree, questions, {setup.parallel});
  session.save();
  out << fmt::format("Post score: {}\n", format_number(result.post_score));
  for (std::size_t i = 0; i < questions.size(); ++i) {
    out << fmt::format("  {}: {}\n", questions[i].id, format_number(result.per_question_scores[i]));
  }
  out << fmt::format("Advantages: {}\nDisadvantages: {}\n", result.advantages, result.disadvantages);
  return kExitOk;
}

int cmd_assess(const Options& options, std::ostream& out, std::ostream& err) {
  const auto setup = resolve(options);
  const auto plan = load_plan(options.plan_path);
  BackendSession session(options, err);
  const Agent judge{session.get(), setup.config.judge};
  const auto score = cidpp_assess(judge, plan);
  session.save();
  const auto dims = score.dimensions();
  for (std::size_t i = 0; i < dims.size(); ++i) {
    out << fmt::format("{}: {}\n", kCidppDimensionNames[i], format_number(dims[i]));
  }
  out << fmt::format("Aggregate: {}\n", format_number(score.aggregate));
  if (score.judge_overall) out << fmt::format("Judge overall: {}\n", format_number(*score.judge_overall));
  return kExitOk;
}

int cmd_annotate(const Options& options, std::ostream& out, std::ostream& err) {
  const auto setup = resolve(options);
  const auto plan = load_plan(options.plan_path);
  const auto cmd = load_mistakes(options);
  BackendSession session(options, err);
  const Agent analyst{session.get(), setup.config.analyst};
  AnalysisOptions analysis;
  analysis.weak_threshold = setup.config.weak_threshold;
  analysis.max_parallel = setup.parallel;
  const auto result = aaea_annotate(analyst, plan, cmd, setup.tree, analysis);
  session.save();
  for (const auto& warning : result.warnings) err << "warning: " << warning << "\n";
  const auto text = json(result.plan).dump(2) + "\n";
  if (options.out.empty()) {
    out << text;
  } else {
    write_file(options.out, text);
    out << fmt::format("annotated plan written to {}\n", options.out);
  }
  return kExitOk;
}

int cmd_skilltree(const Options& options, std::ostream& out) {
  const auto setup = resolve(options);
  out << render_skill_tree_fragment(setup.tree);
  const auto tags = knowledge_background_tags(setup.tree, AnalysisOptions{setup.config.weak_threshold});
  std::string joined;
  for (const auto& tag : tags) joined += (joined.empty() ? "" : ", ") + tag;
  out << fmt::format("Weak-ability tags: {}\n", joined.empty() ? "none" : joined);
  return kExitOk;
}

int cmd_replay(const Options& options, std::ostream& out, std::ostream& err) {
  const auto loaded = load_run(run_file(options.run_path));
  BackendSession session(options, err);
  ExecutionOptions exec;
  exec.max_parallel = options.parallel;
  const auto replayed = replay_run(loaded.record, session.get(), exec);
  session.save();
  const auto digest = run_digest(replayed);
  out << fmt::format("stored digest:   {}\nreplayed digest: {}\n", loaded.stored_digest, digest);
  if (digest != loaded.stored_digest) {
    err << "replay diverged from the recorded run\n";
    return kExitRuntimeError;
  }
  out << "replay matches\n";
  return kExitOk;
}

int cmd_report(const Options& options, std::ostream& out) {
  std::vector<ScoreTable> tables;
  if (options.fixtures.empty()) {
    tables.push_back(parse_score_table(bundled_asset("fixtures/quality_indicators.json")));
    tables.push_back(parse_score_table(bundled_asset("fixtures/ablation.json")));
  } else {
    for (const auto& path : options.fixtures) tables.push_back(load_score_table(path));
  }
  std::optional<LoadedRun> run;
  if (!options.run_path.empty()) run = load_run(run_file(options.run_path));
  const auto report = render_report(run ? &run->record : nullptr, tables);
  out << report.tables;
  if (!report.curve_csv.empty()) {
    if (options.out.empty()) {
      out << "\n" << report.curve_csv;
    } else {
      write_file(options.out, report.curve_csv);
      out << fmt::format("\ncurve written to {}\n", options.out);
    }
  }
  return kExitOk;
}

}  // namespace

int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generate, evaluate and optimize lesson plans with cooperating model agents.",
               "planforge"};
  app.require_subcommand(1);
  Options options;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", options.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--backend", options.backend, "Model backend")
        ->check(CLI::IsMember({"http", "scripted"}));
    sub->add_option("--script", options.script_path, "Recorded responses for the scripted backend")
        ->check(CLI::ExistingFile);
    sub->add_option("--record", options.record_path, "Write every response to this script file");
    sub->add_option("--seed", options.seed, "Sampling seed");
    sub->add_option("--parallel", options.parallel, "Concurrent model calls")
        ->check(CLI::PositiveNumber);
  };
  auto add_run_shape = [&](CLI::App* sub) {
    sub->add_option("--rounds", options.rounds, "Optimization rounds")->check(CLI::NonNegativeNumber);
    sub->add_option("--branching", options.branching, "Candidates per round")
        ->check(CLI::PositiveNumber);
    sub->add_option("--capacity", options.capacity, "Candidate queue capacity")
        ->check(CLI::PositiveNumber);
  };
  auto add_questions = [&](CLI::App* sub) {
    sub->add_option("--questions", options.questions, "Questions per evaluation")
        ->check(CLI::PositiveNumber);
    sub->add_option("--corpus", options.corpus, "Question corpus file")->check(CLI::ExistingFile);
    sub->add_option("--format", options.format, "Corpus format")
        ->check(CLI::IsMember({"gsm8k", "algebra"}));
  };
  auto add_student = [&](CLI::App* sub) {
    sub->add_option("--tree", options.tree_path, "Skill tree JSON")->check(CLI::ExistingFile);
    sub->add_option("--topic", options.topic, "Teaching topic");
  };

  auto* optimize = app.add_subcommand("optimize", "Run the full optimization loop");
  add_common(optimize);
  add_run_shape(optimize);
  add_questions(optimize);
  add_student(optimize);
  optimize->add_option("--plan", options.plan_path, "Initial lesson plan JSON (generated if absent)")
      ->check(CLI::ExistingFile);
  optimize->add_option("--mistakes", options.mistakes_path, "Common mistakes database JSON")
      ->check(CLI::ExistingFile);
  optimize->add_option("--out", options.out, "Directory that receives the run directory");

  auto* evaluate = app.add_subcommand("evaluate", "Score one lesson plan against test questions");
  add_common(evaluate);
  add_questions(evaluate);
  add_student(evaluate);
  evaluate->add_option("--plan", options.plan_path, "Lesson plan JSON")
      ->required()
      ->check(CLI::ExistingFile);

  auto* assess = app.add_subcommand("assess", "Judge one lesson plan on the five-dimension rubric");
  add_common(assess);
  assess->add_option("--plan", options.plan_path, "Lesson plan JSON")
      ->required()
      ->check(CLI::ExistingFile);

  auto* annotate = app.add_subcommand("annotate", "Add error-prone points to one lesson plan");
  add_common(annotate);
  add_student(annotate);
  annotate->add_option("--plan", options.plan_path, "Lesson plan JSON")
      ->required()
      ->check(CLI::ExistingFile);
  annotate->add_option("--mistakes", options.mistakes_path, "Common mistakes database JSON")
      ->check(CLI::ExistingFile);
  annotate->add_option("--out", options.out, "Write the annotated plan here instead of stdout");

  auto* skilltree = app.add_subcommand("skilltree", "Validate and render a skill tree");
  add_common(skilltree);
  add_student(skilltree);

  auto* replay = app.add_subcommand("replay", "Re-run a recorded run and compare digests");
  add_common(replay);
  replay->add_option("--run", options.run_path, "run.json or its run directory")
      ->required()
      ->check(CLI::ExistingPath);

  auto* report = app.add_subcommand("report", "Render score tables and the optimization curve");
  add_common(report);
  report->add_option("--run", options.run_path, "run.json or its run directory")
      ->check(CLI::ExistingPath);
  report->add_option("--fixtures", options.fixtures, "Score table JSON files")
      ->check(CLI::ExistingFile);
  report->add_option("--out", options.out, "Write the curve CSV here");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsageError;
  }

  try {
    if (optimize->parsed()) return cmd_optimize(options, out, err);
    if (evaluate->parsed()) return cmd_evaluate(options, out, err);
    if (assess->parsed()) return cmd_assess(options, out, err);
    if (annotate->parsed()) return cmd_annotate(options, out, err);
    if (skilltree->parsed()) return cmd_skilltree(options, out);
    if (replay->parsed()) return cmd_replay(options, out, err);
    if (report->parsed()) return cmd_report(options, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitUsageError;
}

}  // namespace planforge
