#include "cqms/service/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cqms/error.hpp"
#include "cqms/meta/json.hpp"

namespace cqms::service {

using codec::Json;

namespace {

[[noreturn]] void bad(const std::string& why) { throw Error(ErrorCode::kInvalidArgument, why); }

template <typename T>
void take(const Json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) bad(where + " must be an object");
  for (const auto& [k, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) bad("unknown key '" + k + "' in " + where);
  }
}

}  // namespace

void ServiceConfig::validate() const {
  if (port < 0 || port > 65535) bad("port must be in 0..65535");
  if (miner_interval_ms <= 0 || maintenance_interval_ms <= 0) bad("intervals must be positive");
  default_weights.validate();
  profiler.validate();
  miner.validate();
}

ServiceConfig config_from_json(const Json& j, ServiceConfig c) {
  try {
    check_keys(j,
               {"host", "port", "store", "miner_interval_ms", "maintenance_interval_ms", "auth",
                "admins", "default_weights", "profiler", "miner"},
               "config");
    take(j, "host", c.host);
    take(j, "port", c.port);
    take(j, "store", c.store_path);
    take(j, "miner_interval_ms", c.miner_interval_ms);
    take(j, "maintenance_interval_ms", c.maintenance_interval_ms);
    if (auto it = j.find("auth"); it != j.end()) {
      const auto mode = it->get<std::string>();
      if (mode == "header-principal") c.auth = AuthMode::kHeaderPrincipal;
      else if (mode == "none") c.auth = AuthMode::kNone;
      else bad("auth must be 'header-principal' or 'none'");
    }
    if (auto it = j.find("admins"); it != j.end()) c.admins = it->get<std::set<std::string>>();
    if (auto it = j.find("default_weights"); it != j.end())
      c.default_weights = meta::weights_from_json(*it, c.default_weights);
    if (auto it = j.find("profiler"); it != j.end()) {
      check_keys(*it, {"base_rows_per_second", "min_budget_rows", "max_budget_rows", "rng_seed"},
                 "profiler");
      take(*it, "base_rows_per_second", c.profiler.base_rows_per_second);
      take(*it, "min_budget_rows", c.profiler.min_budget_rows);
      take(*it, "max_budget_rows", c.profiler.max_budget_rows);
      take(*it, "rng_seed", c.profiler.rng_seed);
    }
    if (auto it = j.find("miner"); it != j.end()) {
      check_keys(*it,
                 {"session_gap_ms", "session_sim_threshold", "min_support", "min_confidence",
                  "cluster_link_threshold", "model_version"},
                 "miner");
      take(*it, "session_gap_ms", c.miner.session_gap_ms);
      take(*it, "session_sim_threshold", c.miner.session_sim_threshold);
      take(*it, "min_support", c.miner.min_support);
      take(*it, "min_confidence", c.miner.min_confidence);
      take(*it, "cluster_link_threshold", c.miner.cluster_link_threshold);
      take(*it, "model_version", c.miner.model_version);
    }
  } catch (const Json::exception& e) {
    bad(std::string("bad config: ") + e.what());
  }
  c.validate();
  return c;
}

Json to_json(const ServiceConfig& c) {
  return {{"host", c.host},
          {"port", c.port},
          {"store", c.store_path},
          {"miner_interval_ms", c.miner_interval_ms},
          {"maintenance_interval_ms", c.maintenance_interval_ms},
          {"auth", c.auth == AuthMode::kNone ? "none" : "header-principal"},
          {"admins", c.admins},
          {"default_weights", meta::to_json(c.default_weights)},
          {"profiler",
           {{"base_rows_per_second", c.profiler.base_rows_per_second},
            {"min_budget_rows", c.profiler.min_budget_rows},
            {"max_budget_rows", c.profiler.max_budget_rows},
            {"rng_seed", c.profiler.rng_seed}}},
          {"miner",
           {{"session_gap_ms", c.miner.session_gap_ms},
            {"session_sim_threshold", c.miner.session_sim_threshold},
            {"min_support", c.miner.min_support},
            {"min_confidence", c.miner.min_confidence},
            {"cluster_link_threshold", c.miner.cluster_link_threshold},
            {"model_version", c.miner.model_version}}}};
}

ServiceConfig load_config(const std::optional<std::string>& config_path,
                          const std::optional<std::string>& store_flag) {
  ServiceConfig c;
  if (config_path) {
    std::ifstream in(*config_path);
    if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open config " + *config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    Json j;
    try {
      j = Json::parse(ss.str());
    } catch (const Json::exception& e) {
      bad("config " + *config_path + " is not valid JSON: " + e.what());
    }
    c = config_from_json(j, c);
  }
  if (const char* env = std::getenv("CQMS_STORE"); env && *env) c.store_path = env;
  if (store_flag) c.store_path = *store_flag;
  c.validate();
  return c;
}

}  // namespace cqms::service
