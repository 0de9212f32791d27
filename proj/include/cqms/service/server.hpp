#pragma once

#include <memory>
#include <string>

#include "cqms/service/api.hpp"

namespace cqms::service {

/// HTTP front end for an Api plus the background mine/maintain scheduler.
class Server {
 public:
  explicit Server(Engine& engine);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds host:port (port 0 picks a free one) and returns the bound port.
  /// Throws BindFailure.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Starts the scheduler unless disabled.
  void run(bool with_scheduler = true);
  /// Thread-safe; idempotent.
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Runs the service in the foreground until SIGINT or SIGTERM.
/// Returns the process exit code.
int serve_forever(Engine& engine);

}  // namespace cqms::service
