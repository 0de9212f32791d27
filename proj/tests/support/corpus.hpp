#pragma once

// Random stores for the oracle and property suites.

#include <random>
#include <string>
#include <vector>

#include "cqms/profiler/profiler.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"

namespace support {

struct CorpusOptions {
  std::size_t queries = 200;
  std::size_t users = 6;
  std::size_t groups = 4;
  bool with_schema = true;
  bool shuffle_access = true;
  std::uint64_t seed = 1;
};

inline std::string user_name(std::size_t i) { return "user" + std::to_string(i); }
inline std::string group_name(std::size_t i) { return "grp" + std::to_string(i); }

/// Fills `store` with random lakes queries by random users, with random
/// group membership, visibility, runtimes and a few deletions.
inline void fill_random(cqms::store::Store& store, const CorpusOptions& o) {
  using namespace cqms;
  std::mt19937_64 rng(o.seed);
  if (o.with_schema) store.append(store::SchemaAdded{fixtures::lakes_schema(0)});
  profiler::Profiler profiler(store);
  store::Store::Batch batch(store);
  for (std::size_t i = 0; i < o.queries; ++i) {
    const std::size_t u = generators::pick(rng, o.users);
    store::Principal p{user_name(u), {}, false};
    for (std::size_t g = 0; g < o.groups; ++g)
      if (generators::coin(rng, 0.3)) p.groups.insert(group_name(g));
    profiler::RawQuery raw;
    raw.text = generators::random_query(rng);
    raw.submitted_at = static_cast<EpochMs>(1'000'000 + i * 1000);
    raw.execution_ms = static_cast<std::int64_t>(generators::pick(rng, 5000));
    if (generators::coin(rng, 0.8))
      raw.result_cardinality = static_cast<std::int64_t>(generators::pick(rng, 200));
    const Qid q = profiler.ingest(raw, std::nullopt, p);
    if (o.shuffle_access) {
      const auto r = generators::pick(rng, 10);
      if (r == 0) store.append(store::QueryDeleted{q});
      else if (r <= 2) store.append(store::AccessChanged{q, store::Visibility::kPrivate});
      else if (r <= 4) store.append(store::AccessChanged{q, store::Visibility::kPublic});
    }
  }
}

/// A principal with random group membership, possibly one of the owners.
template <typename Rng>
cqms::store::Principal random_principal(Rng& rng, const CorpusOptions& o) {
  cqms::store::Principal p;
  p.user = generators::coin(rng, 0.5) ? user_name(generators::pick(rng, o.users))
                                      : "stranger" + std::to_string(rng() % 1000);
  for (std::size_t g = 0; g < o.groups; ++g)
    if (generators::coin(rng, 0.25)) p.groups.insert(group_name(g));
  return p;
}

}  // namespace support
