#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "cqms/codec.hpp"
#include "cqms/error.hpp"
#include "cqms/maintenance/maintenance.hpp"
#include "cqms/meta/meta_query.hpp"
#include "cqms/miner/miner.hpp"
#include "cqms/profiler/profiler.hpp"
#include "cqms/service/config.hpp"
#include "cqms/store/store.hpp"

namespace cqms::service {

/// Every component behind the API, wired to one store.
class Engine {
 public:
  /// Opens (or replays) the store and builds the first suggestion model.
  explicit Engine(ServiceConfig config, std::function<EpochMs()> clock = {});

  const ServiceConfig& config() const { return config_; }
  store::Store& store() { return *store_; }
  profiler::Profiler& profiler() { return *profiler_; }
  const meta::Executor& executor() const { return *executor_; }
  miner::Miner& miner() { return *miner_; }
  maintenance::Maintenance& maintenance() { return *maintenance_; }

  /// Sessions for every user, then a fresh suggestion model.
  codec::Json run_mine();
  codec::Json run_maintain(std::optional<EpochMs> data_changed_at,
                           const std::optional<std::set<std::string>>& relations);
  codec::Json last_report() const;

  /// Applies the auth mode and the admin list.
  store::Principal principal(const std::string& user, const std::set<std::string>& groups) const;

 private:
  ServiceConfig config_;
  std::unique_ptr<store::Store> store_;
  std::unique_ptr<profiler::Profiler> profiler_;
  std::unique_ptr<meta::Executor> executor_;
  std::unique_ptr<miner::Miner> miner_;
  std::unique_ptr<maintenance::Maintenance> maintenance_;
  std::mutex jobs_;
  mutable std::mutex report_mutex_;
  codec::Json last_mine_;
  codec::Json last_maintain_;
};

struct Request {
  std::string method;  // GET, POST, PUT, DELETE
  std::string path;
  std::map<std::string, std::string> params;
  std::string body;
  store::Principal principal;
};

struct Response {
  int status = 200;
  std::string body;  // compact JSON
};

/// HTTP status for an engine error: 404 unknown or invisible, 403 not
/// allowed, 400 other caller mistakes, 500 everything else.
int status_for(const Error& e);

/// Routes requests to the engine. Both the HTTP server and the CLI go
/// through here, so they produce the same bytes for the same request.
class Api {
 public:
  explicit Api(Engine& engine) : engine_(engine) {}

  Response handle(const Request& request) const;

 private:
  codec::Json dispatch(const Request& r) const;

  Engine& engine_;
};

}  // namespace cqms::service
