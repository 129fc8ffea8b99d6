// Copyright 2026 The radsum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RADSUM_TEXT_HPP_
#define RADSUM_TEXT_HPP_

#include <cstddef>
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace radsum {

// Normalization applied before whitespace splitting. Lowercasing is ASCII
// only and punctuation stripping replaces ASCII punctuation plus the Unicode
// General Punctuation block with a space, so tokenization never depends on
// the process locale.
struct TokenizerConfig {
  bool lowercase = true;
  bool strip_punctuation = true;
  // Runs of Unicode whitespace always separate tokens; kept as a field so the
  // full behaviour is visible in serialized configs.
  static constexpr bool collapse_whitespace = true;

  friend bool operator==(const TokenizerConfig&, const TokenizerConfig&) = default;
};

// An ordered sequence of non-empty tokens.
class TokenSeq {
 public:
  using value_type = std::string;
  using const_iterator = std::vector<std::string>::const_iterator;

  TokenSeq() = default;
  // Throws radsum::Error if any token is empty.
  explicit TokenSeq(std::vector<std::string> tokens);
  TokenSeq(std::initializer_list<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }
  const_iterator begin() const { return tokens_.begin(); }
  const_iterator end() const { return tokens_.end(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;

 private:
  std::vector<std::string> tokens_;
};

using NGram = std::vector<std::string>;

// Multiset of contiguous n-token windows.
struct NGramCounts {
  std::size_t n = 1;
  std::map<NGram, std::size_t> counts;

  std::size_t Total() const;
  std::size_t CountOf(const NGram& gram) const;
};

TokenSeq Tokenize(std::string_view text, const TokenizerConfig& cfg = {});

// Throws radsum::Error when n < 1.
NGramCounts NGrams(const TokenSeq& tokens, std::size_t n);

// Length of a longest common subsequence under exact token equality.
// O(|x|*|y|) time, O(min(|x|,|y|)) memory.
std::size_t LcsLength(const TokenSeq& x, const TokenSeq& y);

// Sentence segmentation used by the extractive mocks and by length
// enforcement: a sentence ends at '.', '!' or '?' followed by whitespace or
// end of text, and at every newline. Sentences are returned trimmed and
// non-empty, with their terminal punctuation.
std::vector<std::string> SplitSentences(std::string_view text);

std::string Trim(std::string_view text);

}  // namespace radsum

#endif  // RADSUM_TEXT_HPP_
