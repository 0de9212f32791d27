#include "cqms/store/types.hpp"

#include <charconv>
#include <cmath>

#include "cqms/error.hpp"

namespace cqms::store {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view name, const std::pair<E, std::string_view> (&table)[N],
             const char* what) {
  for (const auto& [value, text] : table)
    if (text == name) return value;
  throw Error(ErrorCode::kInvalidArgument, std::string("unknown ") + what + ": " +
                                               std::string(name));
}

template <typename E, std::size_t N>
std::string_view enum_name(E value, const std::pair<E, std::string_view> (&table)[N]) {
  for (const auto& [v, text] : table)
    if (v == value) return text;
  return "?";
}

constexpr std::pair<Validity, std::string_view> kValidity[] = {
    {Validity::kValid, "valid"},
    {Validity::kFlaggedSchema, "flagged_schema"},
    {Validity::kDeleted, "deleted"}};
constexpr std::pair<Visibility, std::string_view> kVisibility[] = {
    {Visibility::kPrivate, "private"}, {Visibility::kGroup, "group"}, {Visibility::kPublic, "public"}};
constexpr std::pair<EdgeType, std::string_view> kEdgeType[] = {
    {EdgeType::kTemporal, "temporal"},
    {EdgeType::kModification, "modification"},
    {EdgeType::kInvestigation, "investigation"}};
constexpr std::pair<SummaryMode, std::string_view> kSummaryMode[] = {
    {SummaryMode::kFull, "full"}, {SummaryMode::kSample, "sample"}};

bool is_number(const Value& v) { return v.v.index() == 2 || v.v.index() == 3; }

double as_double(const Value& v) {
  return v.v.index() == 2 ? static_cast<double>(std::get<std::int64_t>(v.v))
                          : std::get<double>(v.v);
}

}  // namespace

std::string_view validity_name(Validity v) { return enum_name(v, kValidity); }
std::string_view visibility_name(Visibility v) { return enum_name(v, kVisibility); }
std::string_view edge_type_name(EdgeType t) { return enum_name(t, kEdgeType); }
std::string_view summary_mode_name(SummaryMode m) { return enum_name(m, kSummaryMode); }
Validity parse_validity(std::string_view n) { return parse_enum(n, kValidity, "validity"); }
Visibility parse_visibility(std::string_view n) { return parse_enum(n, kVisibility, "visibility"); }
EdgeType parse_edge_type(std::string_view n) { return parse_enum(n, kEdgeType, "edge type"); }
SummaryMode parse_summary_mode(std::string_view n) {
  return parse_enum(n, kSummaryMode, "summary mode");
}

bool Value::operator==(const Value& o) const {
  if (is_number(*this) && is_number(o)) {
    if (v.index() == 2 && o.v.index() == 2)
      return std::get<std::int64_t>(v) == std::get<std::int64_t>(o.v);
    return as_double(*this) == as_double(o);
  }
  return v == o.v;
}

bool Value::operator<(const Value& o) const {
  const auto rank = [](const Value& x) {
    return is_number(x) ? std::size_t{2} : x.v.index();
  };
  if (rank(*this) != rank(o)) return rank(*this) < rank(o);
  if (is_number(*this)) {
    if (v.index() == 2 && o.v.index() == 2)
      return std::get<std::int64_t>(v) < std::get<std::int64_t>(o.v);
    return as_double(*this) < as_double(o);
  }
  return v < o.v;
}

std::string Value::to_string() const {
  switch (v.index()) {
    case 0: return "null";
    case 1: return std::get<bool>(v) ? "true" : "false";
    case 2: return std::to_string(std::get<std::int64_t>(v));
    case 3: {
      char buf[32];
      auto r = std::to_chars(buf, buf + sizeof buf, std::get<double>(v));
      return std::string(buf, r.ptr);
    }
    default: return std::get<std::string>(v);
  }
}

bool visible_to(const StoredQuery& q, const Principal& p) {
  if (p.superuser || q.owner == p.user) return true;
  switch (q.visibility) {
    case Visibility::kPublic: return true;
    case Visibility::kPrivate: return false;
    case Visibility::kGroup:
      for (const auto& g : q.groups)
        if (p.groups.count(g)) return true;
      return false;
  }
  return false;
}

std::string_view event_type_name(const Event& e) {
  static constexpr std::string_view kNames[] = {
      "QueryAdded",    "AnnotationAdded", "EdgeAdded",    "SchemaAdded",
      "FlagChanged",   "AccessChanged",   "QueryDeleted", "SessionAssigned"};
  return kNames[e.index()];
}

}  // namespace cqms::store
