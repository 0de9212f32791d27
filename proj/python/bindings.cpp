#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cqms/service/api.hpp"
#include "cqms/sql/canonical.hpp"
#include "cqms/sql/diff.hpp"
#include "cqms/sql/parser.hpp"
#include "cqms/sql/similarity.hpp"

namespace py = pybind11;
using namespace cqms;

namespace {

sql::FeatureSet features_of(const std::string& text, const std::optional<std::string>& schema_json) {
  std::optional<sql::SchemaSnapshot> schema;
  if (schema_json) schema = codec::schema_from_json(codec::Json::parse(*schema_json));
  return sql::extract_features(sql::canonicalize(sql::parse(text)), schema ? &*schema : nullptr);
}

/// Owns the engine and its Api so Python sees one object.
class PyEngine {
 public:
  PyEngine(const std::string& config_json, const std::optional<std::string>& store)
      : engine_(make_config(config_json, store)), api_(engine_) {}

  std::pair<int, std::string> request(const std::string& method, const std::string& path,
                                      const std::string& body,
                                      const std::map<std::string, std::string>& params,
                                      const std::optional<std::string>& user,
                                      const std::set<std::string>& groups) {
    service::Request r{method, path, params, body,
                       user ? engine_.principal(*user, groups) : store::Principal{"admin", groups, true}};
    py::gil_scoped_release release;
    auto res = api_.handle(r);
    return {res.status, std::move(res.body)};
  }

  void sync() { engine_.store().sync(); }
  std::uint64_t seq() { return engine_.store().seq(); }

 private:
  static service::ServiceConfig make_config(const std::string& json, const std::optional<std::string>& store) {
    auto c = json.empty() ? service::ServiceConfig{} : service::config_from_json(codec::Json::parse(json));
    if (store) c.store_path = *store;
    return c;
  }

  service::Engine engine_;
  service::Api api_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the cqms package";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result(
      [&]() { return py::object(py::exception<Error>(m, "NativeError", PyExc_RuntimeError)); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object type = error_type.get_stored();
      py::object inst = type(std::string(error_code_name(e.code())), e.what());
      PyErr_SetObject(type.ptr(), inst.ptr());
    } catch (const codec::Json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("canonicalize", [](const std::string& text) { return sql::render(sql::canonicalize(sql::parse(text))); },
        py::arg("text"), "Canonical SQL text.");
  m.def("template", [](const std::string& text) {
        return sql::render(sql::to_template(sql::canonicalize(sql::parse(text))));
      }, py::arg("text"), "Canonical text with constants replaced by '?'.");
  m.def("features", [](const std::string& text, const std::optional<std::string>& schema) {
        return codec::to_json(features_of(text, schema)).dump();
      }, py::arg("text"), py::arg("schema") = std::nullopt, "Feature set as JSON.");
  m.def("diff", [](const std::string& a, const std::string& b, const std::optional<std::string>& schema) {
        return codec::to_json(sql::diff(features_of(a, schema), features_of(b, schema))).dump();
      }, py::arg("before"), py::arg("after"), py::arg("schema") = std::nullopt, "Edit script as JSON.");
  m.def("similarity", [](const std::string& a, const std::string& b, const std::optional<std::string>& schema) {
        return sql::similarity(features_of(a, schema), features_of(b, schema));
      }, py::arg("a"), py::arg("b"), py::arg("schema") = std::nullopt);

  py::class_<PyEngine>(m, "Engine")
      .def(py::init<const std::string&, const std::optional<std::string>&>(), py::arg("config_json") = "",
           py::arg("store") = std::nullopt)
      .def("request", &PyEngine::request, py::arg("method"), py::arg("path"), py::arg("body") = "",
           py::arg("params") = std::map<std::string, std::string>{}, py::arg("user") = std::nullopt,
           py::arg("groups") = std::set<std::string>{})
      .def("sync", &PyEngine::sync)
      .def_property_readonly("seq", &PyEngine::seq);
}
