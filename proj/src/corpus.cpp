#include "planforge/corpus.hpp"

#include <numeric>
#include <random>

#include <fmt/format.h>

#include "planforge/error.hpp"
#include "planforge/util.hpp"

namespace planforge {

using nlohmann::json;

CorpusFormat corpus_format_from_string(std::string_view text) {
  if (text == "gsm8k") return CorpusFormat::Gsm8k;
  if (text == "algebra") return CorpusFormat::Algebra;
  throw Error(ErrorKind::ParseError, fmt::format("unknown corpus format '{}'", text));
}

namespace {

std::vector<TestQuestion> parse_gsm8k(std::string_view text) {
  std::vector<TestQuestion> questions;
  std::size_t line_number = 0;
  for (const auto line : split_lines(text)) {
    ++line_number;
    if (trim(line).empty()) continue;
    auto fail = [&](const std::string& why) -> void {
      throw Error(ErrorKind::ParseError, fmt::format("line {}: {}", line_number, why));
    };
    std::string question;
    std::string answer;
    try {
      const auto record = json::parse(line);
      question = record.at("question").get<std::string>();
      answer = record.at("answer").get<std::string>();
    } catch (const json::exception& e) {
      fail(e.what());
    }
    const auto marker = answer.rfind("####");
    if (marker == std::string::npos) fail("answer has no '####' marker");
    const auto reference = trim(std::string_view(answer).substr(marker + 4));
    if (reference.empty()) fail("nothing follows the '####' marker");
    if (trim(question).empty()) fail("question is empty");
    questions.push_back({fmt::format("gsm8k-{}", line_number), std::string(trim(question)),
                         std::string(reference), QuestionSource::Gsm8k});
  }
  return questions;
}

std::vector<TestQuestion> parse_algebra(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, fmt::format("algebra corpus is not valid JSON: {}", e.what()));
  }
  if (!doc.is_array()) throw Error(ErrorKind::ParseError, "algebra corpus must be a JSON array");
  std::vector<TestQuestion> questions;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& record = doc[i];
    auto fail = [&](const std::string& why) -> void {
      throw Error(ErrorKind::ParseError, fmt::format("record {}: {}", i + 1, why));
    };
    std::string problem;
    std::string solution;
    try {
      problem = record.contains("problem") ? record.at("problem").get<std::string>()
                                           : record.at("equation").get<std::string>();
      solution = record.at("solution").get<std::string>();
    } catch (const json::exception& e) {
      fail(e.what());
    }
    if (trim(problem).empty()) fail("problem text is empty");
    if (trim(solution).empty()) fail("solution text is empty");
    questions.push_back({fmt::format("algebra-{}", i + 1), std::string(trim(problem)),
                         std::string(trim(solution)), QuestionSource::Algebra});
  }
  return questions;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = rng();
    if (x >= threshold) return x % bound;
  }
}

}  // namespace

std::vector<TestQuestion> parse_questions(std::string_view text, CorpusFormat format) {
  auto questions = format == CorpusFormat::Gsm8k ? parse_gsm8k(text) : parse_algebra(text);
  if (questions.empty()) throw Error(ErrorKind::EmptyCorpus, "corpus contains no questions");
  return questions;
}

std::vector<TestQuestion> load_questions(const std::string& path, CorpusFormat format) {
  return parse_questions(read_file(path), format);
}

std::vector<std::size_t> sample_indices(std::size_t pool_size, std::size_t count,
                                        std::uint64_t seed) {
  if (count > pool_size) {
    throw Error(ErrorKind::SampleTooLarge,
                fmt::format("cannot sample {} questions from {}", count, pool_size));
  }
  std::vector<std::size_t> indices(pool_size);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_below(rng, pool_size - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(count);
  return indices;
}

std::vector<TestQuestion> sample_questions(std::span<const TestQuestion> questions,
                                           std::size_t count, std::uint64_t seed) {
  std::vector<TestQuestion> sample;
  sample.reserve(count);
  for (const auto i : sample_indices(questions.size(), count, seed)) sample.push_back(questions[i]);
  return sample;
}

}  // namespace planforge
