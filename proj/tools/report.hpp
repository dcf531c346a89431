#pragma once

// JSON rendering for the mlmom command-line tool. Schema: docs/report-schema.md.

#include <cmath>
#include <ctime>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mlmom/mlmom.hpp"

namespace mlmom::report {

using Json = nlohmann::ordered_json;

/// NaN and infinities have no JSON spelling; they become null.
inline Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json number(const std::optional<double>& x) { return x ? number(*x) : Json(nullptr); }

inline Json error(ErrorCode code, const std::string& message, const Error::Context& context = {},
                  const std::string& scope = {}) {
  Json e;
  e["code"] = std::string(error_name(code));
  if (!scope.empty()) e["scope"] = scope;
  e["message"] = message;
  if (!context.empty()) {
    Json ctx = Json::object();
    for (const auto& [k, v] : context) ctx[k] = v;
    e["context"] = std::move(ctx);
  }
  return e;
}

inline Json error(const Error& e) { return error(e.code(), e.message(), e.context()); }

inline Json header(const std::string& command) {
  Json j;
  j["tool"] = "mlmom";
  j["version"] = kVersion;
  j["command"] = command;
  return j;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm parts{};
  gmtime_r(&now, &parts);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &parts);
  return buffer;
}

inline Json check(const CheckResult& r) {
  Json j;
  j["id"] = r.id;
  j["criterion"] = r.criterion == 0 ? Json(nullptr) : Json(r.criterion);
  j["description"] = r.description;
  j["expected"] = r.expected;
  j["actual"] = r.actual;
  j["tolerance"] = r.tolerance;
  j["asserted"] = r.asserted;
  j["passed"] = r.passed;
  if (r.z) j["z"] = number(*r.z);
  if (r.se) j["se"] = number(*r.se);
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline Json bias(const BiasReport& b) {
  Json j;
  j["estimator"] = b.name;
  j["true_value"] = number(b.true_value);
  j["true_value_exact"] = to_string(b.truth);
  j["mean"] = number(b.mean);
  j["se"] = number(b.se);
  j["z"] = number(b.z);
  j["reps"] = b.reps;
  j["failures"] = b.failures;
  j["degenerate"] = b.degenerate;
  return j;
}

}  // namespace mlmom::report
