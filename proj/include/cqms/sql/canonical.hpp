#pragma once

#include <string>

#include "cqms/sql/ast.hpp"

namespace cqms::sql {

/// Brings a tree into canonical form:
///  - unquoted identifiers lower-cased, quoted ones preserved
///  - table aliases replaced by their base relation names
///  - AND/OR chains flattened and their operands sorted
///  - comparisons written column-first, flipping the operator if needed
///  - numeric literals normalised ("1.5e3" -> "1500", "18.0" -> "18")
/// Canonical trees are fixed points.
ParseTree canonicalize(const ParseTree& tree);

/// Replaces every literal with a `?` placeholder. Constant-free trees are
/// returned unchanged; the result is canonical when the input is.
ParseTree to_template(const ParseTree& tree);

/// Pretty-prints a tree back to SQL. For canonical trees the output parses
/// back to the same canonical tree.
std::string render(const ParseTree& tree);
std::string render(const Node& node);

/// Canonical numeric literal text.
std::string normalize_number(const std::string& text);

}  // namespace cqms::sql
