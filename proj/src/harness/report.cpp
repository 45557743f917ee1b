#include <cmath>
#include <cstdio>
#include <sstream>

#include "osslab/harness.hpp"
#include "osslab/persistence.hpp"

namespace osslab::harness {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError("config: " + what);
}

const std::vector<std::string>& game_names() {
  static const std::vector<std::string> names{"all",
                                              "oneshot-structural",
                                              "oss-incompressibility",
                                              "rom-incompressibility",
                                              "subspace-stats",
                                              "query-weight"};
  return names;
}

bool listed(const std::vector<std::string>& names, const std::string& name) {
  for (const auto& n : names)
    if (n == name) return true;
  return false;
}

json params_json(const oracles::KeyFireParams& p) {
  return {{"n", p.oss.n},   {"r", p.oss.r},   {"k", p.oss.k},      {"att", p.att},
          {"sig", p.sig},   {"nu", p.nu},     {"jmax", p.jmax}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  require(listed(command_names(), experiment), "unknown experiment '" + experiment + "'");
  require(trials >= 0, "trials must not be negative");
  require(threads >= 1, "threads must be at least 1");
  require(chain_depth >= 0 && chain_depth <= 8, "chain_depth must lie in [0, 8]");
  require(zeta_count >= 0, "zeta_count must not be negative");
  require(zeta_support >= 1, "zeta_support must be at least 1");
  require(thresholds.is_object(), "thresholds must be an object");
  if (experiment == "instance") {
    const std::string a = action.empty() ? "roundtrip" : action;
    require(a == "save" || a == "load" || a == "audit" || a == "roundtrip",
            "instance action must be save, load, audit or roundtrip");
    require(a == "audit" || a == "roundtrip" || instance_path.has_value(),
            "instance " + a + " needs an instance path");
  }
  if (experiment == "games")
    require(action.empty() || listed(game_names(), action), "unknown game '" + action + "'");

  // With an instance file the parameters come from the file.
  if (instance_path && experiment != "instance") return;
  if (experiment == "clone-fidelity" || experiment == "keyfire-endtoend" ||
      experiment == "instance") {
    params.validate();
  } else {
    params.oss.validate();
    if (params.jmax < 1) throw ParameterError("jmax must be at least 1");
  }
}

json ExperimentConfig::to_json() const {
  json doc = {{"experiment", experiment},
              {"action", action},
              {"params", params_json(params)},
              {"seed", seed},
              {"trials", trials},
              {"threads", threads},
              {"exact_sign", exact_sign},
              {"thresholds", thresholds},
              {"chain_depth", chain_depth},
              {"zeta_count", zeta_count},
              {"zeta_support", zeta_support},
              {"timing", timing}};
  doc["instance"] = instance_path ? json(*instance_path) : json(nullptr);
  return doc;
}

ExperimentConfig config_from_json(const json& doc, ExperimentConfig base) {
  require(doc.is_object(), "config document must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "experiment") {
      base.experiment = value.get<std::string>();
    } else if (key == "action") {
      base.action = value.get<std::string>();
    } else if (key == "params") {
      require(value.is_object(), "params must be an object");
      for (const auto& [name, v] : value.items()) {
        const int x = v.get<int>();
        if (name == "n") base.params.oss.n = x;
        else if (name == "r") base.params.oss.r = x;
        else if (name == "k") base.params.oss.k = x;
        else if (name == "att") base.params.att = x;
        else if (name == "sig") base.params.sig = x;
        else if (name == "nu") base.params.nu = x;
        else if (name == "jmax") base.params.jmax = x;
        else require(false, "unknown parameter '" + name + "'");
      }
    } else if (key == "seed") {
      base.seed = value.get<std::uint64_t>();
    } else if (key == "trials") {
      base.trials = value.get<int>();
    } else if (key == "threads") {
      base.threads = value.get<int>();
    } else if (key == "exact_sign") {
      base.exact_sign = value.get<bool>();
    } else if (key == "instance") {
      if (value.is_null()) base.instance_path.reset();
      else base.instance_path = value.get<std::string>();
    } else if (key == "thresholds") {
      require(value.is_object(), "thresholds must be an object");
      for (const auto& [name, v] : value.items()) base.thresholds[name] = v;
    } else if (key == "chain_depth") {
      base.chain_depth = value.get<int>();
    } else if (key == "zeta_count") {
      base.zeta_count = value.get<int>();
    } else if (key == "zeta_support") {
      base.zeta_support = value.get<int>();
    } else if (key == "timing") {
      base.timing = value.get<bool>();
    } else {
      require(false, "unknown key '" + key + "'");
    }
  }
  return base;
}

oracles::KeyFireParams parse_params(const std::string& text, oracles::KeyFireParams base) {
  std::vector<int> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == item.size() && !item.empty(), "bad --params entry '" + item + "'");
    values.push_back(v);
  }
  require(values.size() >= 3 && values.size() <= 7,
          "--params takes n,r,k optionally followed by att,sig,nu,jmax");
  int* slots[] = {&base.oss.n, &base.oss.r, &base.oss.k, &base.att,
                  &base.sig,   &base.nu,    &base.jmax};
  for (std::size_t i = 0; i < values.size(); ++i) *slots[i] = values[i];
  return base;
}

// ---------------------------------------------------------------------------
// Report

bool ExperimentReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

Check& ExperimentReport::check(std::string name, double value, std::string relation,
                               double threshold) {
  Check c{std::move(name), value, threshold, std::move(relation), false};
  if (c.relation == ">=") c.passed = value >= threshold;
  else if (c.relation == "<=") c.passed = value <= threshold;
  else if (c.relation == "==") c.passed = value == threshold;
  else throw ParameterError("unknown check relation " + c.relation);
  checks.push_back(std::move(c));
  return checks.back();
}

json ExperimentReport::to_json() const {
  json out;
  out["schema_version"] = kReportSchemaVersion;
  out["experiment"] = config.experiment;
  out["config"] = config.to_json();
  out["trials"] = trials;
  out["aggregate"] = aggregate;
  json cs = json::array();
  for (const auto& c : checks)
    cs.push_back({{"name", c.name},
                  {"value", c.value},
                  {"relation", c.relation},
                  {"threshold", c.threshold},
                  {"passed", c.passed}});
  out["checks"] = cs;
  out["passed"] = passed();
  out["versions"] = {{"osslab", kVersion},
                     {"report_schema", kReportSchemaVersion},
                     {"instance_format", oracles::kInstanceFormatVersion}};
  if (wall_clock_seconds) out["wall_clock_seconds"] = *wall_clock_seconds;
  return out;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

void render_to(std::string& out, const json& doc, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(2 * depth), ' ');
  switch (doc.type()) {
    case json::value_t::object: {
      if (doc.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : doc.items()) {  // std::map: sorted keys
        if (!first) out += ",\n";
        first = false;
        out += pad + json(key).dump() + ": ";
        render_to(out, value, depth + 1);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case json::value_t::array: {
      if (doc.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < doc.size(); ++i) {
        if (i > 0) out += ",\n";
        out += pad;
        render_to(out, doc[i], depth + 1);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = doc.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.12g", v);
      out += buf;
      return;
    }
    default:
      out += doc.dump();
  }
}

}  // namespace

std::string render(const json& doc) {
  std::string out;
  render_to(out, doc, 0);
  out += "\n";
  return out;
}

}  // namespace osslab::harness
