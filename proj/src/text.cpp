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

#include "radsum/text.hpp"

#include <algorithm>

#include "radsum/error.hpp"

namespace radsum {
namespace {

// Decodes one UTF-8 code point starting at text[i], advancing i. Malformed
// sequences consume one byte and decode to U+FFFD.
char32_t DecodeUtf8(std::string_view text, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  std::size_t len = 0;
  char32_t cp = 0;
  if (b0 < 0x80) {
    ++i;
    return b0;
  } else if ((b0 & 0xe0) == 0xc0) {
    len = 2;
    cp = b0 & 0x1f;
  } else if ((b0 & 0xf0) == 0xe0) {
    len = 3;
    cp = b0 & 0x0f;
  } else if ((b0 & 0xf8) == 0xf0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xfffd;
  }
  if (i + len > text.size()) {
    ++i;
    return 0xfffd;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(text[i + k]);
    if ((b & 0xc0) != 0x80) {
      ++i;
      return 0xfffd;
    }
    cp = (cp << 6) | (b & 0x3f);
  }
  i += len;
  return cp;
}

bool IsUnicodeWhitespace(char32_t cp) {
  return (cp >= 0x09 && cp <= 0x0d) || cp == 0x20 || cp == 0x85 || cp == 0xa0 ||
         cp == 0x1680 || (cp >= 0x2000 && cp <= 0x200a) || cp == 0x2028 ||
         cp == 0x2029 || cp == 0x202f || cp == 0x205f || cp == 0x3000;
}

bool IsPunctuation(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2f) || (cp >= 0x3a && cp <= 0x40) ||
           (cp >= 0x5b && cp <= 0x60) || (cp >= 0x7b && cp <= 0x7e);
  }
  return (cp >= 0x2010 && cp <= 0x2027) || (cp >= 0x2030 && cp <= 0x205e);
}

bool IsAsciiSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

TokenSeq::TokenSeq(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (const auto& t : tokens_) {
    if (t.empty()) throw Error("token sequence contains an empty token");
  }
}

TokenSeq::TokenSeq(std::initializer_list<std::string> tokens)
    : TokenSeq(std::vector<std::string>(tokens)) {}

std::size_t NGramCounts::Total() const {
  std::size_t total = 0;
  for (const auto& [gram, c] : counts) total += c;
  return total;
}

std::size_t NGramCounts::CountOf(const NGram& gram) const {
  auto it = counts.find(gram);
  return it == counts.end() ? 0 : it->second;
}

TokenSeq Tokenize(std::string_view text, const TokenizerConfig& cfg) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    const char32_t cp = DecodeUtf8(text, i);
    const bool separator =
        IsUnicodeWhitespace(cp) || (cfg.strip_punctuation && IsPunctuation(cp));
    if (separator) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      continue;
    }
    if (cp < 0x80) {
      char c = static_cast<char>(cp);
      if (cfg.lowercase && c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      current.push_back(c);
    } else {
      current.append(text.substr(start, i - start));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return TokenSeq(std::move(tokens));
}

NGramCounts NGrams(const TokenSeq& tokens, std::size_t n) {
  if (n < 1) throw Error("n-gram order must be at least 1");
  NGramCounts out;
  out.n = n;
  if (tokens.size() < n) return out;
  const auto& toks = tokens.tokens();
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    ++out.counts[NGram(toks.begin() + static_cast<std::ptrdiff_t>(i),
                       toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

std::size_t LcsLength(const TokenSeq& x, const TokenSeq& y) {
  const TokenSeq& longer = x.size() >= y.size() ? x : y;
  const TokenSeq& shorter = x.size() >= y.size() ? y : x;
  if (shorter.empty()) return 0;
  std::vector<std::size_t> row(shorter.size() + 1, 0);
  for (std::size_t i = 1; i <= longer.size(); ++i) {
    std::size_t diag = 0;  // row[j-1] from the previous iteration of i
    for (std::size_t j = 1; j <= shorter.size(); ++j) {
      const std::size_t up = row[j];
      if (longer[i - 1] == shorter[j - 1]) {
        row[j] = diag + 1;
      } else {
        row[j] = std::max(row[j], row[j - 1]);
      }
      diag = up;
    }
  }
  return row.back();
}

std::string Trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && IsAsciiSpace(text[b])) ++b;
  while (e > b && IsAsciiSpace(text[e - 1])) --e;
  return std::string(text.substr(b, e - b));
}

std::vector<std::string> SplitSentences(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    std::string s = Trim(current);
    if (!s.empty()) out.push_back(std::move(s));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      flush();
      continue;
    }
    current.push_back(c);
    if ((c == '.' || c == '!' || c == '?') &&
        (i + 1 == text.size() || IsAsciiSpace(text[i + 1]))) {
      flush();
    }
  }
  flush();
  return out;
}

}  // namespace radsum
