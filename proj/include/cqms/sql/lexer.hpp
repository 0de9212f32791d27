#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cqms::sql {

enum class TokenType {
  kIdentifier,        // bare word; keywords are identifiers the parser recognises
  kQuotedIdentifier,  // "Name"
  kString,            // 'text' (value holds the unescaped contents)
  kNumber,
  kParameter,  // ?
  kComma,
  kDot,
  kLParen,
  kRParen,
  kStar,
  kCompare,  // = <> != < <= > >=
  kArith,    // + - / %
  kSemicolon,
  kEnd,
};

struct Token {
  TokenType type = TokenType::kEnd;
  std::string text;  // normalised text; for identifiers the original spelling
  std::size_t begin = 0;
  std::size_t end = 0;

  bool is_keyword(std::string_view upper) const;
};

/// Splits SQL text into tokens. `--` comments are skipped. Always ends with
/// a kEnd token positioned at the end of the input. Throws SyntaxError on an
/// unterminated string or an unknown character.
std::vector<Token> tokenize(std::string_view text);

/// Reserved words that can never be read as identifiers or aliases.
bool is_reserved_word(std::string_view word);

bool iequals(std::string_view a, std::string_view b);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);

}  // namespace cqms::sql
