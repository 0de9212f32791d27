#include "cqms/service/server.hpp"

#include <pthread.h>

#include <atomic>
#include <condition_variable>
#include <csignal>
#include <iostream>
#include <sstream>
#include <thread>

#include "httplib.h"

namespace cqms::service {

namespace {

std::set<std::string> split_groups(const std::string& s) {
  std::set<std::string> out;
  std::stringstream ss(s);
  std::string g;
  while (std::getline(ss, g, ',')) {
    const auto b = g.find_first_not_of(' ');
    const auto e = g.find_last_not_of(' ');
    if (b != std::string::npos) out.insert(g.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

struct Server::Impl {
  Engine& engine;
  Api api;
  httplib::Server http;
  std::thread scheduler;
  std::mutex mu;
  std::condition_variable cv;
  bool stopping = false;

  explicit Impl(Engine& e) : engine(e), api(e) {
    // No SO_REUSEPORT: a second server on a busy port must fail, not share it.
    http.set_tcp_nodelay(true);
    http.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    const auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      Request r;
      r.method = req.method;
      r.path = req.path;
      for (const auto& [k, v] : req.params) r.params.emplace(k, v);
      r.body = req.body;
      r.principal = engine.principal(req.get_header_value("X-Principal"),
                                     split_groups(req.get_header_value("X-Groups")));
      const auto out = api.handle(r);
      res.status = out.status;
      res.set_content(out.body, "application/json");
    };
    const std::string all = R"(/.*)";
    http.Get(all, handler);
    http.Post(all, handler);
    http.Put(all, handler);
    http.Delete(all, handler);
  }

  void schedule() {
    using clock = std::chrono::steady_clock;
    const auto mine_every = std::chrono::milliseconds(engine.config().miner_interval_ms);
    const auto maintain_every = std::chrono::milliseconds(engine.config().maintenance_interval_ms);
    auto next_mine = clock::now() + mine_every;
    auto next_maintain = clock::now() + maintain_every;
    std::unique_lock lock(mu);
    while (!stopping) {
      cv.wait_until(lock, std::min(next_mine, next_maintain), [this] { return stopping; });
      if (stopping) break;
      lock.unlock();
      const auto now = clock::now();
      // A failing job is logged and retried on the next tick.
      try {
        if (now >= next_mine) {
          engine.run_mine();
          next_mine = now + mine_every;
        }
        if (now >= next_maintain) {
          engine.run_maintain(std::nullopt, std::nullopt);
          next_maintain = now + maintain_every;
        }
      } catch (const std::exception& e) {
        std::cerr << "cqms: background job failed: " << e.what() << "\n";
        next_mine = std::max(next_mine, now + mine_every);
        next_maintain = std::max(next_maintain, now + maintain_every);
      }
      lock.lock();
    }
  }
};

Server::Server(Engine& engine) : impl_(std::make_unique<Impl>(engine)) {}

Server::~Server() {
  stop();
  if (impl_->scheduler.joinable()) impl_->scheduler.join();
}

int Server::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->http.bind_to_any_port(host)
                              : (impl_->http.bind_to_port(host, port) ? port : -1);
  if (bound < 0)
    throw Error(ErrorCode::kBindFailure, "cannot listen on " + host + ":" + std::to_string(port));
  return bound;
}

void Server::run(bool with_scheduler) {
  if (with_scheduler) impl_->scheduler = std::thread([this] { impl_->schedule(); });
  impl_->http.listen_after_bind();
  stop();
  if (impl_->scheduler.joinable()) impl_->scheduler.join();
}

void Server::stop() {
  {
    std::lock_guard lock(impl_->mu);
    impl_->stopping = true;
  }
  impl_->cv.notify_all();
  impl_->http.stop();
}

bool Server::running() const { return impl_->http.is_running(); }

int serve_forever(Engine& engine) {
  // Block the signals everywhere so only the waiter thread sees them.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  Server server(engine);
  const auto& c = engine.config();
  const int port = server.bind(c.host, c.port);
  std::cerr << "cqms: listening on " << c.host << ":" << port << "\n";

  std::atomic<bool> done{false};
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    if (!done) server.stop();
  });
  server.run();
  done = true;
  // Wake the waiter if the server stopped on its own.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  engine.store().sync();
  std::cerr << "cqms: stopped\n";
  return 0;
}

}  // namespace cqms::service
