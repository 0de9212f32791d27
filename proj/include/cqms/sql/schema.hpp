#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cqms {

using EpochMs = std::int64_t;

namespace sql {

struct Column {
  std::string name;
  std::string type;

  bool operator==(const Column&) const = default;
};

/// The database schema as of `effective_at`. Relation and attribute names
/// are stored in canonical (lower-case) spelling.
struct SchemaSnapshot {
  EpochMs effective_at = 0;
  std::map<std::string, std::vector<Column>> relations;

  bool has_relation(const std::string& relation) const;
  bool has_attribute(const std::string& relation, const std::string& attribute) const;
  /// Relations among `candidates` that define `attribute`.
  std::vector<std::string> owners(const std::string& attribute,
                                  const std::vector<std::string>& candidates) const;

  /// Lower-cases names and rejects duplicates (throws InvalidArgument).
  static SchemaSnapshot normalized(SchemaSnapshot raw);

  bool operator==(const SchemaSnapshot&) const = default;
};

}  // namespace sql
}  // namespace cqms
