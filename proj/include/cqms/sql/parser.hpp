#pragma once

#include <string_view>

#include "cqms/sql/ast.hpp"

namespace cqms::sql {

/// Parses one statement of the supported SELECT subset:
///
///   SELECT [DISTINCT] list FROM refs [JOIN ... ON ...]
///     [WHERE cond] [GROUP BY ...] [HAVING cond] [ORDER BY ...] [LIMIT n]
///
/// Conditions may use AND/OR/NOT, the comparison operators, LIKE, IN-lists,
/// BETWEEN and one level of scalar, IN or EXISTS subquery.
///
/// Input that stops early (a query still being typed) yields a tree with
/// Placeholder holes and `partial` set instead of an error, provided the
/// prefix read so far is unambiguous.
///
/// Throws SyntaxError for malformed input and UnsupportedFeature for
/// constructs outside the subset (window functions, set operations, DML...).
ParseTree parse(std::string_view text);

}  // namespace cqms::sql
