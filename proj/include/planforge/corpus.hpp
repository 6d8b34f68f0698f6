#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "planforge/domain.hpp"

namespace planforge {

enum class CorpusFormat { Gsm8k, Algebra };

CorpusFormat corpus_format_from_string(std::string_view text);

/// gsm8k: one JSON object per line with "question" and "answer"; the text
/// after the last "####" in the answer is the reference answer.
/// algebra: a JSON array of {problem (or equation), solution}.
/// Throws ParseError naming the offending line or record, EmptyCorpus when
/// nothing was read.
std::vector<TestQuestion> parse_questions(std::string_view text, CorpusFormat format);
std::vector<TestQuestion> load_questions(const std::string& path, CorpusFormat format);

/// Uniform sample of `count` questions without replacement. Draws come from
/// std::mt19937_64 (fully specified by the standard) through a rejection
/// sampler, so a seed gives the same sample on every platform.
/// Throws SampleTooLarge when count exceeds the pool.
std::vector<TestQuestion> sample_questions(std::span<const TestQuestion> questions,
                                           std::size_t count, std::uint64_t seed);

/// Indices chosen by sample_questions: a partial Fisher-Yates shuffle of
/// 0..pool_size-1 where each draw in [0, b) rejects raw outputs below
/// 2^64 mod b and reduces the rest modulo b.
std::vector<std::size_t> sample_indices(std::size_t pool_size, std::size_t count,
                                        std::uint64_t seed);

}  // namespace planforge
