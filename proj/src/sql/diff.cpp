#include "cqms/sql/diff.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "cqms/error.hpp"
#include "cqms/sql/canonical.hpp"

namespace cqms::sql {

std::string_view edit_kind_name(EditKind kind) {
  switch (kind) {
    case EditKind::kAddRelation: return "AddRelation";
    case EditKind::kRemoveRelation: return "RemoveRelation";
    case EditKind::kAddPredicate: return "AddPredicate";
    case EditKind::kRemovePredicate: return "RemovePredicate";
    case EditKind::kChangeConstant: return "ChangeConstant";
    case EditKind::kAddProjection: return "AddProjection";
    case EditKind::kRemoveProjection: return "RemoveProjection";
    case EditKind::kAddGroupBy: return "AddGroupBy";
    case EditKind::kRemoveGroupBy: return "RemoveGroupBy";
    case EditKind::kOther: return "Other";
  }
  return "Other";
}

EditKind parse_edit_kind(std::string_view name) {
  for (int k = 0; k <= static_cast<int>(EditKind::kOther); ++k) {
    const auto kind = static_cast<EditKind>(k);
    if (edit_kind_name(kind) == name) return kind;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown edit kind: " + std::string(name));
}

std::string Edit::label() const {
  const std::string name(edit_kind_name(kind));
  const std::string qualified =
      attribute + (relation.empty() || relation == kUnresolved ? "" : "@" + relation);
  switch (kind) {
    case EditKind::kAddRelation:
    case EditKind::kRemoveRelation:
      return name + "(" + relation + ")";
    case EditKind::kAddPredicate:
      return name + "(" + qualified + " " + op + " " + new_value + ")";
    case EditKind::kRemovePredicate:
      return name + "(" + qualified + " " + op + " " + old_value + ")";
    case EditKind::kChangeConstant:
      return name + "(" + attribute + ", " + old_value + ", " + new_value + ")";
    case EditKind::kAddProjection:
    case EditKind::kRemoveProjection:
    case EditKind::kAddGroupBy:
    case EditKind::kRemoveGroupBy:
      return name + "(" + qualified + ")";
    case EditKind::kOther:
      return name + "(" + detail + ")";
  }
  return name;
}

namespace {

// Other-edit facets.
constexpr const char* kJoin = "join";
constexpr const char* kAggregate = "agg";
constexpr const char* kSubquery = "subquery";

int category(EditKind k) {
  switch (k) {
    case EditKind::kAddRelation:
    case EditKind::kRemoveRelation: return 0;
    case EditKind::kAddPredicate:
    case EditKind::kRemovePredicate:
    case EditKind::kChangeConstant: return 1;
    case EditKind::kAddProjection:
    case EditKind::kRemoveProjection: return 2;
    case EditKind::kAddGroupBy:
    case EditKind::kRemoveGroupBy: return 3;
    case EditKind::kOther: return 4;
  }
  return 4;
}

bool edit_less(const Edit& a, const Edit& b) {
  return std::make_tuple(category(a.kind), a.attribute, a.relation, a.op, a.detail, a.old_value,
                         a.new_value, static_cast<int>(a.kind)) <
         std::make_tuple(category(b.kind), b.attribute, b.relation, b.op, b.detail, b.old_value,
                         b.new_value, static_cast<int>(b.kind));
}

template <typename T>
std::vector<T> minus(const std::set<T>& a, const std::set<T>& b) {
  std::vector<T> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

using AttrKey = std::pair<std::string, std::string>;

std::set<AttrKey> predicate_attributes(const std::set<Predicate>& preds) {
  std::set<AttrKey> out;
  for (const auto& p : preds) out.emplace(p.attribute, p.relation);
  return out;
}

// WHERE-role attributes not implied by a selection predicate.
std::set<AttributeUse> residual_attributes(const FeatureSet& fs) {
  const auto implied = predicate_attributes(fs.predicates);
  std::set<AttributeUse> out;
  for (const auto& a : fs.attributes) {
    if (a.role == AttributeRole::kSelect || a.role == AttributeRole::kGroupBy) continue;
    if (a.role == AttributeRole::kWhere && implied.count({a.attribute, a.relation})) continue;
    out.insert(a);
  }
  return out;
}

std::set<AttributeUse> with_role(const FeatureSet& fs, AttributeRole role) {
  std::set<AttributeUse> out;
  for (const auto& a : fs.attributes)
    if (a.role == role) out.insert(a);
  return out;
}

Edit other(char sign, std::string facet, std::string relation, std::string attribute,
           std::string detail) {
  Edit e;
  e.kind = EditKind::kOther;
  e.op = std::move(facet);
  e.relation = std::move(relation);
  e.attribute = std::move(attribute);
  e.detail = std::string(1, sign) + std::move(detail);
  return e;
}

Edit attribute_other(char sign, const AttributeUse& a) {
  return other(sign, "attr:" + std::string(role_name(a.role)), a.relation, a.attribute,
               "attr:" + std::string(role_name(a.role)) + ":" + a.attribute + "@" + a.relation);
}

}  // namespace

EditScript diff(const FeatureSet& from, const FeatureSet& to) {
  EditScript out;

  for (const auto& r : minus(to.data_sources, from.data_sources))
    out.push_back(Edit{EditKind::kAddRelation, r, {}, {}, {}, {}, {}});
  for (const auto& r : minus(from.data_sources, to.data_sources))
    out.push_back(Edit{EditKind::kRemoveRelation, r, {}, {}, {}, {}, {}});

  // Predicates: pair up removals and additions that differ only in the
  // constant.
  using Group = std::tuple<std::string, std::string, std::string>;
  std::map<Group, std::pair<std::vector<std::string>, std::vector<std::string>>> groups;
  for (const auto& p : minus(from.predicates, to.predicates))
    groups[{p.attribute, p.relation, p.op}].first.push_back(p.constant);
  for (const auto& p : minus(to.predicates, from.predicates))
    groups[{p.attribute, p.relation, p.op}].second.push_back(p.constant);
  for (auto& [g, lists] : groups) {
    auto& [removed, added] = lists;
    const auto& [attr, rel, op] = g;
    std::sort(removed.begin(), removed.end());
    std::sort(added.begin(), added.end());
    const std::size_t paired = std::min(removed.size(), added.size());
    for (std::size_t i = 0; i < paired; ++i)
      out.push_back(Edit{EditKind::kChangeConstant, rel, attr, op, removed[i], added[i], {}});
    for (std::size_t i = paired; i < removed.size(); ++i)
      out.push_back(Edit{EditKind::kRemovePredicate, rel, attr, op, removed[i], {}, {}});
    for (std::size_t i = paired; i < added.size(); ++i)
      out.push_back(Edit{EditKind::kAddPredicate, rel, attr, op, {}, added[i], {}});
  }

  const auto sel_from = with_role(from, AttributeRole::kSelect);
  const auto sel_to = with_role(to, AttributeRole::kSelect);
  for (const auto& a : minus(sel_to, sel_from))
    out.push_back(Edit{EditKind::kAddProjection, a.relation, a.attribute, {}, {}, {}, {}});
  for (const auto& a : minus(sel_from, sel_to))
    out.push_back(Edit{EditKind::kRemoveProjection, a.relation, a.attribute, {}, {}, {}, {}});

  const auto grp_from = with_role(from, AttributeRole::kGroupBy);
  const auto grp_to = with_role(to, AttributeRole::kGroupBy);
  for (const auto& a : minus(grp_to, grp_from))
    out.push_back(Edit{EditKind::kAddGroupBy, a.relation, a.attribute, {}, {}, {}, {}});
  for (const auto& a : minus(grp_from, grp_to))
    out.push_back(Edit{EditKind::kRemoveGroupBy, a.relation, a.attribute, {}, {}, {}, {}});

  const auto res_from = residual_attributes(from);
  const auto res_to = residual_attributes(to);
  for (const auto& a : minus(res_to, res_from)) out.push_back(attribute_other('+', a));
  for (const auto& a : minus(res_from, res_to)) out.push_back(attribute_other('-', a));

  for (const auto& j : minus(to.join_pairs, from.join_pairs))
    out.push_back(other('+', kJoin, j.first, j.second, "join:" + j.first + "~" + j.second));
  for (const auto& j : minus(from.join_pairs, to.join_pairs))
    out.push_back(other('-', kJoin, j.first, j.second, "join:" + j.first + "~" + j.second));

  auto agg_text = [](const AggregateUse& a) {
    return "agg:" + a.function + "(" + a.attribute + "@" + a.relation + ")";
  };
  for (const auto& a : minus(to.aggregates, from.aggregates)) {
    Edit e = other('+', kAggregate, a.relation, a.attribute, agg_text(a));
    e.new_value = a.function;
    out.push_back(std::move(e));
  }
  for (const auto& a : minus(from.aggregates, to.aggregates)) {
    Edit e = other('-', kAggregate, a.relation, a.attribute, agg_text(a));
    e.new_value = a.function;
    out.push_back(std::move(e));
  }
  if (from.has_subquery != to.has_subquery)
    out.push_back(other(to.has_subquery ? '+' : '-', kSubquery, {}, {}, kSubquery));

  std::sort(out.begin(), out.end(), edit_less);
  return out;
}

EditScript diff(const ParseTree& from, const ParseTree& to, const SchemaSnapshot* schema) {
  return diff(extract_features(from, schema), extract_features(to, schema));
}

EditScript reversed(const EditScript& script) {
  EditScript out;
  out.reserve(script.size());
  for (Edit e : script) {
    switch (e.kind) {
      case EditKind::kAddRelation: e.kind = EditKind::kRemoveRelation; break;
      case EditKind::kRemoveRelation: e.kind = EditKind::kAddRelation; break;
      case EditKind::kAddProjection: e.kind = EditKind::kRemoveProjection; break;
      case EditKind::kRemoveProjection: e.kind = EditKind::kAddProjection; break;
      case EditKind::kAddGroupBy: e.kind = EditKind::kRemoveGroupBy; break;
      case EditKind::kRemoveGroupBy: e.kind = EditKind::kAddGroupBy; break;
      case EditKind::kAddPredicate:
        e.kind = EditKind::kRemovePredicate;
        std::swap(e.old_value, e.new_value);
        break;
      case EditKind::kRemovePredicate:
        e.kind = EditKind::kAddPredicate;
        std::swap(e.old_value, e.new_value);
        break;
      case EditKind::kChangeConstant:
        std::swap(e.old_value, e.new_value);
        break;
      case EditKind::kOther:
        if (!e.detail.empty()) e.detail[0] = e.detail[0] == '+' ? '-' : '+';
        break;
    }
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), edit_less);
  return out;
}

FeatureSet apply(FeatureSet base, const EditScript& script) {
  auto residual = residual_attributes(base);
  std::set<AttributeUse> kept;
  for (const auto& a : base.attributes)
    if (a.role == AttributeRole::kSelect || a.role == AttributeRole::kGroupBy) kept.insert(a);

  for (const auto& e : script) {
    switch (e.kind) {
      case EditKind::kAddRelation: base.data_sources.insert(e.relation); break;
      case EditKind::kRemoveRelation: base.data_sources.erase(e.relation); break;
      case EditKind::kAddPredicate:
        base.predicates.insert({e.attribute, e.relation, e.op, e.new_value});
        break;
      case EditKind::kRemovePredicate:
        base.predicates.erase({e.attribute, e.relation, e.op, e.old_value});
        break;
      case EditKind::kChangeConstant:
        base.predicates.erase({e.attribute, e.relation, e.op, e.old_value});
        base.predicates.insert({e.attribute, e.relation, e.op, e.new_value});
        break;
      case EditKind::kAddProjection:
        kept.insert({e.attribute, e.relation, AttributeRole::kSelect});
        break;
      case EditKind::kRemoveProjection:
        kept.erase({e.attribute, e.relation, AttributeRole::kSelect});
        break;
      case EditKind::kAddGroupBy:
        kept.insert({e.attribute, e.relation, AttributeRole::kGroupBy});
        break;
      case EditKind::kRemoveGroupBy:
        kept.erase({e.attribute, e.relation, AttributeRole::kGroupBy});
        break;
      case EditKind::kOther: {
        const bool add = !e.detail.empty() && e.detail[0] == '+';
        if (e.op == kJoin) {
          const JoinPair j{e.relation, e.attribute};
          if (add) base.join_pairs.insert(j);
          else base.join_pairs.erase(j);
        } else if (e.op == kAggregate) {
          const AggregateUse a{e.new_value, e.attribute, e.relation};
          if (add) base.aggregates.insert(a);
          else base.aggregates.erase(a);
        } else if (e.op == kSubquery) {
          base.has_subquery = add;
        } else if (e.op.rfind("attr:", 0) == 0) {
          const AttributeUse a{e.attribute, e.relation, parse_role(e.op.substr(5))};
          if (add) residual.insert(a);
          else residual.erase(a);
        }
        break;
      }
    }
  }

  base.attributes = std::move(kept);
  base.attributes.insert(residual.begin(), residual.end());
  for (const auto& p : base.predicates)
    base.attributes.insert({p.attribute, p.relation, AttributeRole::kWhere});
  return base;
}

}  // namespace cqms::sql
