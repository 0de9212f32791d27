#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cqms/sql/ast.hpp"
#include "cqms/sql/features.hpp"

namespace cqms::sql {

enum class EditKind {
  kAddRelation,
  kRemoveRelation,
  kAddPredicate,
  kRemovePredicate,
  kChangeConstant,
  kAddProjection,
  kRemoveProjection,
  kAddGroupBy,
  kRemoveGroupBy,
  kOther,
};

std::string_view edit_kind_name(EditKind kind);
EditKind parse_edit_kind(std::string_view name);

/// One step of an edit script. Which fields are set depends on the kind:
/// relation edits use `relation`; predicate edits use attribute, relation,
/// op and `new_value` (added) or `old_value` (removed); ChangeConstant sets
/// both values; projection and group-by edits use attribute and relation;
/// Other carries a tagged description in `detail` ("+join:a~b", ...).
struct Edit {
  EditKind kind = EditKind::kOther;
  std::string relation;
  std::string attribute;
  std::string op;
  std::string old_value;
  std::string new_value;
  std::string detail;

  bool operator==(const Edit&) const = default;

  /// Human-readable label, e.g. "ChangeConstant(temp, 20, 18)".
  std::string label() const;
};

using EditScript = std::vector<Edit>;

/// Feature-wise difference from `from` to `to`. A predicate whose constant is
/// the only change becomes a ChangeConstant. Edits are ordered relations,
/// predicates, projections, group-by, other; alphabetically within each.
EditScript diff(const FeatureSet& from, const FeatureSet& to);
EditScript diff(const ParseTree& from, const ParseTree& to,
                const SchemaSnapshot* schema = nullptr);

/// The script read backwards: additions become removals and changed
/// constants swap. reversed(diff(a, b)) == diff(b, a).
EditScript reversed(const EditScript& script);

/// Applies the relation, predicate, projection and group-by edits of a
/// script to a feature set.
FeatureSet apply(FeatureSet base, const EditScript& script);

}  // namespace cqms::sql
