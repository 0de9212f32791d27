// Command-line front end. Every subcommand is a request to the same Api the
// HTTP server uses, so the output bytes match the HTTP response bodies.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cqms/service/api.hpp"
#include "cqms/service/server.hpp"

using namespace cqms;
using service::Request;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::set<std::string> split_groups(const std::string& s) {
  std::set<std::string> out;
  std::stringstream ss(s);
  std::string g;
  while (std::getline(ss, g, ','))
    if (!g.empty()) out.insert(g);
  return out;
}

int exit_code_for(int status) { return status < 400 ? 0 : status < 500 ? 1 : 2; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cqms: collaborative query management"};
  app.require_subcommand(1);
  app.fallthrough();
  app.failure_message(CLI::FailureMessage::help);

  std::optional<std::string> config_path, store_path;
  std::string user, groups;
  bool pretty = false;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--store", store_path, "Store log path (overrides config and $CQMS_STORE)");
  app.add_option("--user", user, "Act as this user (default: administrator)");
  app.add_option("--groups", groups, "Comma-separated groups for --user");
  app.add_flag("--pretty", pretty, "Indent JSON output");

  Request req;
  std::string file, json, text, kind = "any", partial, signal = "unknown-identifier";
  std::string qid, visibility, recent, keyword, substring;
  std::vector<std::size_t> span;
  std::int64_t k = 10, limit = 10;
  std::optional<std::int64_t> data_changed_at;
  std::vector<std::string> relations;

  auto* ingest = app.add_subcommand("ingest", "Log queries from an NDJSON file");
  ingest->add_option("file", file)->required();
  auto* schema = app.add_subcommand("schema", "Record a schema snapshot from a JSON file");
  schema->add_option("file", file)->required();
  auto* search = app.add_subcommand("search", "Run a meta-query");
  search->add_option("json", json, "Meta-query as JSON (omit to list everything visible)");
  search->add_option("--keyword", keyword);
  search->add_option("--substring", substring);
  auto* get = app.add_subcommand("get", "Show one query");
  get->add_option("qid", qid)->required();
  auto* suggest = app.add_subcommand("suggest", "Complete a partial query");
  suggest->add_option("--partial", partial);
  suggest->add_option("--kind", kind)->check(CLI::IsMember({"relation", "attribute", "predicate", "any"}));
  suggest->add_option("--limit", limit);
  auto* corrections = app.add_subcommand("corrections", "Suggest fixes for a query");
  corrections->add_option("query", text)->required();
  corrections->add_option("--signal", signal)->check(CLI::IsMember({"unknown-identifier", "empty-result"}));
  auto* sessions = app.add_subcommand("sessions", "Show a user's sessions");
  sessions->add_option("user", text)->required();
  auto* similar = app.add_subcommand("similar", "Queries similar to a stored one");
  similar->add_option("qid", qid)->required();
  similar->add_option("-k", k);
  auto* recommend = app.add_subcommand("recommend", "Recommend queries from recent work");
  recommend->add_option("--recent", recent, "Comma-separated qids");
  recommend->add_option("--text", text, "Draft query text");
  recommend->add_option("-k", k);
  auto* mine = app.add_subcommand("mine", "Segment sessions and rebuild the suggestion model");
  auto* maintain = app.add_subcommand("maintain", "Flag invalid queries and stale statistics");
  maintain->add_option("--data-changed-at", data_changed_at);
  maintain->add_option("--relations", relations)->delimiter(',');
  auto* annotate = app.add_subcommand("annotate", "Attach a note to a query");
  annotate->add_option("qid", qid)->required();
  annotate->add_option("--text", text)->required();
  annotate->add_option("--span", span)->expected(2);
  auto* del = app.add_subcommand("delete", "Delete a query you own");
  del->add_option("qid", qid)->required();
  auto* access = app.add_subcommand("access", "Change who can see a query");
  access->add_option("qid", qid)->required();
  access->add_option("--visibility", visibility)->required()->check(CLI::IsMember({"private", "group", "public"}));
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const auto config = service::load_config(config_path, store_path);
    service::Engine engine(config);
    if (serve->parsed()) return service::serve_forever(engine);

    req.principal = user.empty() ? store::Principal{"admin", split_groups(groups), true}
                                 : engine.principal(user, split_groups(groups));
    using J = codec::Json;
    auto set = [&](const char* method, std::string path, std::string body = {}) {
      req.method = method;
      req.path = std::move(path);
      req.body = std::move(body);
    };
    if (ingest->parsed()) {
      set("POST", "/queries/batch", read_file(file));
    } else if (schema->parsed()) {
      set("POST", "/schema", read_file(file));
    } else if (search->parsed()) {
      if (!keyword.empty()) json = J{{"type", "keyword"}, {"terms", keyword}}.dump();
      else if (!substring.empty()) json = J{{"type", "substring"}, {"pattern", substring}}.dump();
      set("POST", "/search", json);
    } else if (get->parsed()) {
      set("GET", "/queries/" + qid);
    } else if (suggest->parsed()) {
      set("GET", "/suggest");
      req.params = {{"partial", partial}, {"kind", kind}, {"limit", std::to_string(limit)}};
    } else if (corrections->parsed()) {
      set("POST", "/corrections", J{{"query", text}, {"signal", signal}}.dump());
    } else if (sessions->parsed()) {
      set("GET", "/sessions/" + text);
    } else if (similar->parsed()) {
      if (qid.empty() || qid.find_first_not_of("0123456789") != std::string::npos)
        throw Error(ErrorCode::kInvalidArgument, "qid must be a number");
      set("POST", "/search", J{{"type", "knn"}, {"qid", qid}, {"k", k}}.dump());
    } else if (recommend->parsed()) {
      set("GET", "/recommend");
      req.params = {{"recent", recent}, {"text", text}, {"k", std::to_string(k)}};
    } else if (mine->parsed()) {
      set("POST", "/admin/mine");
    } else if (maintain->parsed()) {
      J body = J::object();
      if (data_changed_at) body["data_changed_at"] = *data_changed_at;
      if (!relations.empty()) body["relations"] = relations;
      set("POST", "/admin/maintain", body.dump());
    } else if (annotate->parsed()) {
      J body = {{"qid", qid}, {"text", text}};
      if (!span.empty()) body["span"] = span;
      set("POST", "/annotations", body.dump());
    } else if (del->parsed()) {
      set("DELETE", "/queries/" + qid);
    } else if (access->parsed()) {
      set("PUT", "/queries/" + qid + "/access", J{{"visibility", visibility}}.dump());
    }

    const auto res = service::Api(engine).handle(req);
    if (res.status >= 400) {
      const auto err = J::parse(res.body);
      std::cerr << "cqms: " << err["error"]["message"].get<std::string>() << "\n";
    }
    std::cout << (pretty ? J::parse(res.body).dump(2) : res.body) << "\n";
    return exit_code_for(res.status);
  } catch (const Error& e) {
    std::cerr << "cqms: " << e.what() << "\n";
    return e.is_user_error() ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "cqms: " << e.what() << "\n";
    return 2;
  }
}
