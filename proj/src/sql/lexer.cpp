#include "cqms/sql/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "cqms/error.hpp"

namespace cqms::sql {

namespace {

constexpr std::array kReserved = {
    "ALL",    "ALTER",  "AND",     "AS",     "ASC",   "BETWEEN",   "BY",     "CREATE",
    "CROSS",  "DELETE", "DESC",    "DISTINCT", "DROP", "EXCEPT",   "EXISTS", "FROM",
    "FULL",   "GROUP",  "HAVING",  "IN",     "INNER", "INSERT",    "INTERSECT", "IS",
    "JOIN",   "LEFT",   "LIKE",    "LIMIT",  "NOT",   "NULL",      "OFFSET", "ON",
    "OR",     "ORDER",  "OUTER",   "OVER",   "RIGHT", "SELECT",    "UNION",  "UPDATE",
    "WHERE",  "WITH",
};

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
         static_cast<unsigned char>(c) >= 0x80;
}

bool ident_char(char c) {
  return ident_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '$';
}

}  // namespace

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::toupper(static_cast<unsigned char>(x)) ==
                  std::toupper(static_cast<unsigned char>(y));
         });
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string to_upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool is_reserved_word(std::string_view word) {
  return std::any_of(kReserved.begin(), kReserved.end(),
                     [&](const char* k) { return iequals(word, k); });
}

bool Token::is_keyword(std::string_view upper) const {
  return type == TokenType::kIdentifier && iequals(text, upper);
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto push = [&](TokenType t, std::string s, std::size_t b, std::size_t e) {
    out.push_back(Token{t, std::move(s), b, e});
  };

  while (i < n) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < n && text[i + 1] == '-') {
      while (i < n && text[i] != '\n') ++i;
      continue;
    }
    const std::size_t begin = i;
    if (ident_start(c)) {
      while (i < n && ident_char(text[i])) ++i;
      push(TokenType::kIdentifier, std::string(text.substr(begin, i - begin)), begin, i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
      if (i < n && text[i] == '.') {
        ++i;
        while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
      }
      if (i < n && (text[i] == 'e' || text[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < n && (text[j] == '+' || text[j] == '-')) ++j;
        if (j < n && std::isdigit(static_cast<unsigned char>(text[j]))) {
          i = j;
          while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
        }
      }
      push(TokenType::kNumber, std::string(text.substr(begin, i - begin)), begin, i);
      continue;
    }
    if (c == '\'' || c == '"') {
      std::string value;
      ++i;
      bool closed = false;
      while (i < n) {
        if (text[i] == c) {
          if (i + 1 < n && text[i + 1] == c) {
            value.push_back(c);
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        value.push_back(text[i++]);
      }
      if (!closed)
        throw SyntaxError(begin, {c == '\'' ? "closing quote" : "closing double quote"},
                          "unterminated literal");
      push(c == '\'' ? TokenType::kString : TokenType::kQuotedIdentifier, std::move(value),
           begin, i);
      continue;
    }
    switch (c) {
      case ',': push(TokenType::kComma, ",", begin, ++i); continue;
      case '.': push(TokenType::kDot, ".", begin, ++i); continue;
      case '(': push(TokenType::kLParen, "(", begin, ++i); continue;
      case ')': push(TokenType::kRParen, ")", begin, ++i); continue;
      case '*': push(TokenType::kStar, "*", begin, ++i); continue;
      case ';': push(TokenType::kSemicolon, ";", begin, ++i); continue;
      case '?': push(TokenType::kParameter, "?", begin, ++i); continue;
      case '+':
      case '-':
      case '/':
      case '%':
      case '|':
        push(TokenType::kArith, std::string(1, c), begin, ++i);
        continue;
      case '=': push(TokenType::kCompare, "=", begin, ++i); continue;
      case '<':
        if (i + 1 < n && (text[i + 1] == '=' || text[i + 1] == '>')) {
          push(TokenType::kCompare, std::string(text.substr(i, 2)), begin, i + 2);
          i += 2;
        } else {
          push(TokenType::kCompare, "<", begin, ++i);
        }
        continue;
      case '>':
        if (i + 1 < n && text[i + 1] == '=') {
          push(TokenType::kCompare, ">=", begin, i + 2);
          i += 2;
        } else {
          push(TokenType::kCompare, ">", begin, ++i);
        }
        continue;
      case '!':
        if (i + 1 < n && text[i + 1] == '=') {
          push(TokenType::kCompare, "<>", begin, i + 2);
          i += 2;
          continue;
        }
        break;
      default:
        break;
    }
    throw SyntaxError(begin, {}, std::string("unexpected character '") + c + "'");
  }
  out.push_back(Token{TokenType::kEnd, "", n, n});
  return out;
}

}  // namespace cqms::sql
