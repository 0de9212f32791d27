#pragma once

#include <optional>
#include <set>
#include <string>

#include "cqms/codec.hpp"
#include "cqms/meta/meta_query.hpp"
#include "cqms/miner/miner.hpp"
#include "cqms/profiler/profiler.hpp"

namespace cqms::service {

enum class AuthMode {
  kHeaderPrincipal,  // X-Principal / X-Groups name the caller
  kNone,             // every caller is a superuser
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  /// Empty keeps the store in memory.
  std::string store_path;
  std::int64_t miner_interval_ms = 300'000;
  std::int64_t maintenance_interval_ms = 3'600'000;
  AuthMode auth = AuthMode::kHeaderPrincipal;
  /// Users granted superuser rights under header auth.
  std::set<std::string> admins = {"admin"};
  meta::RankWeights default_weights;
  profiler::ProfilerConfig profiler;
  miner::MinerConfig miner;

  /// Throws InvalidArgument.
  void validate() const;
};

/// Unknown keys are rejected so typos do not pass silently.
ServiceConfig config_from_json(const codec::Json& j, ServiceConfig base = {});
codec::Json to_json(const ServiceConfig& c);

/// Defaults, then the JSON file at `config_path`, then $CQMS_STORE, then
/// `store_flag`. Throws FileNotFound or InvalidArgument.
ServiceConfig load_config(const std::optional<std::string>& config_path,
                          const std::optional<std::string>& store_flag);

}  // namespace cqms::service
