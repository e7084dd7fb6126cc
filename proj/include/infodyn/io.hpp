#pragma once

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "infodyn/ais.hpp"
#include "infodyn/compare.hpp"
#include "infodyn/error.hpp"
#include "infodyn/generate.hpp"
#include "infodyn/inference.hpp"
#include "infodyn/pid.hpp"

namespace infodyn {

using json = nlohmann::json;

namespace detail {

template <class Enum, std::size_t N>
using NameTable = std::array<std::pair<Enum, std::string_view>, N>;

inline constexpr NameTable<AnalysisMode, 4> kModeNames{{{AnalysisMode::multivariate_te, "multivariate_te"},
                                                        {AnalysisMode::bivariate_te, "bivariate_te"},
                                                        {AnalysisMode::multivariate_mi, "multivariate_mi"},
                                                        {AnalysisMode::bivariate_mi, "bivariate_mi"}}};
inline constexpr NameTable<EstimatorKind, 3> kEstimatorNames{
    {{EstimatorKind::gaussian, "gaussian"}, {EstimatorKind::knn, "knn"}, {EstimatorKind::discrete, "discrete"}}};
inline constexpr NameTable<SurrogateMethod, 2> kSurrogateNames{
    {{SurrogateMethod::circular_shift, "circular_shift"}, {SurrogateMethod::replication_shuffle, "replication_shuffle"}}};
inline constexpr NameTable<GeneratorKind, 2> kGeneratorNames{
    {{GeneratorKind::gaussian_ar, "gaussian_ar"}, {GeneratorKind::logistic_map_network, "logistic_map_network"}}};

template <class Enum, std::size_t N>
std::string name_of(const NameTable<Enum, N>& table, Enum e) {
  for (const auto& [k, v] : table)
    if (k == e) return std::string(v);
  fail(ErrorKind::InvalidArgument, "unnamed enumerator");
}

template <class Enum, std::size_t N>
Enum parse_name(const NameTable<Enum, N>& table, const std::string& s, const std::string& key) {
  for (const auto& [k, v] : table)
    if (v == s) return k;
  std::string allowed;
  for (const auto& [k, v] : table) allowed += (allowed.empty() ? "" : ", ") + std::string(v);
  fail(ErrorKind::Config, "key '" + key + "': unknown value '" + s + "' (expected one of " + allowed + ")");
}

}  // namespace detail

inline std::string to_string(AnalysisMode m) { return detail::name_of(detail::kModeNames, m); }
inline std::string to_string(EstimatorKind e) { return detail::name_of(detail::kEstimatorNames, e); }
inline std::string to_string(SurrogateMethod m) { return detail::name_of(detail::kSurrogateNames, m); }
inline std::string to_string(GeneratorKind g) { return detail::name_of(detail::kGeneratorNames, g); }

/// Typed, strict access to one JSON object. Every key must be consumed
/// before finish(); leftovers are reported as unknown keys.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(ErrorKind::Config, where_ + ": expected a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    if (!j_.contains(key)) fail(ErrorKind::Config, where_ + ": missing required key '" + key + "'");
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  T require(const std::string& key) {
    if (!j_.contains(key)) fail(ErrorKind::Config, where_ + ": missing required key '" + key + "'");
    seen_.insert(key);
    return convert<T>(j_.at(key), key);
  }

  template <class T>
  bool get(const std::string& key, T& out) {
    if (!j_.contains(key)) return false;
    seen_.insert(key);
    out = convert<T>(j_.at(key), key);
    return true;
  }

  template <class Enum, std::size_t N>
  bool get_enum(const std::string& key, const detail::NameTable<Enum, N>& table, Enum& out) {
    std::string s;
    if (!get(key, s)) return false;
    out = detail::parse_name(table, s, qualified(key));
    return true;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) fail(ErrorKind::Config, where_ + ": unknown key '" + key + "'");
  }

  std::string qualified(const std::string& key) const { return where_ + "." + key; }

 private:
  template <class T>
  T convert(const json& v, const std::string& key) const {
    auto type_error = [&](const char* expected) {
      fail(ErrorKind::Config, "key '" + qualified(key) + "': expected " + expected);
    };
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) type_error("a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_unsigned()) type_error("a non-negative integer");
      return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) type_error("a number");
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) type_error("a string");
      return v.get<std::string>();
    } else {
      return v;
    }
  }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

// ---------------------------------------------------------------------------
// Canonical text form: sorted keys, two-space indentation, floating-point
// values with 17 significant digits.

namespace detail {

inline void canonical_number(std::string& out, double v) {
  if (!std::isfinite(v)) fail(ErrorKind::InvalidValue, "cannot serialize a non-finite number");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

inline void canonical_dump(std::string& out, const json& j, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(2 * depth), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : j.items()) {  // std::map: already sorted
        if (!first) out += ",\n";
        first = false;
        out += pad + json(key).dump() + ": ";
        canonical_dump(out, value, depth + 1);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        canonical_dump(out, j[i], depth + 1);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case json::value_t::number_float:
      canonical_number(out, j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

}  // namespace detail

inline std::string canonical_dump(const json& j) {
  std::string out;
  detail::canonical_dump(out, j, 0);
  out += "\n";
  return out;
}

inline json parse_json_file(const std::filesystem::path& path, ErrorKind on_error = ErrorKind::Config) {
  std::ifstream in(path);
  if (!in) fail(on_error == ErrorKind::Config ? ErrorKind::Config : ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(on_error, path.string() + ": malformed JSON (" + e.what() + ")");
  }
}

// ---------------------------------------------------------------------------
// Settings

inline json to_json(const InferenceSettings& s) {
  json j;
  j["mode"] = to_string(s.mode);
  j["estimator"] = to_string(s.estimator);
  j["max_lag_sources"] = s.max_lag_sources;
  j["min_lag_sources"] = s.min_lag_sources;
  j["max_lag_target"] = s.max_lag_target;
  j["tau_sources"] = s.tau_sources;
  j["tau_target"] = s.tau_target;
  j["alpha_max_stat"] = s.alpha_max_stat;
  j["alpha_min_stat"] = s.alpha_min_stat;
  j["alpha_omnibus"] = s.alpha_omnibus;
  j["alpha_max_seq"] = s.alpha_max_seq;
  j["alpha_fdr"] = s.alpha_fdr;
  j["n_perm_max_stat"] = s.n_perm_max_stat;
  j["n_perm_min_stat"] = s.n_perm_min_stat;
  j["n_perm_omnibus"] = s.n_perm_omnibus;
  j["n_perm_max_seq"] = s.n_perm_max_seq;
  j["knn_k"] = s.knn_k;
  j["noise_amplitude"] = s.noise_amplitude;
  j["discrete_state_cap"] = s.discrete_state_cap;
  j["surrogate"] = s.surrogate ? json(to_string(*s.surrogate)) : json(nullptr);
  j["seed"] = s.seed;
  return j;
}

/// Reads settings, starting from the defaults for absent keys. Unknown keys
/// and invalid combinations are configuration errors.
inline InferenceSettings settings_from_json(const json& j, const std::string& where = "settings") {
  InferenceSettings s;
  ObjectReader r(j, where);
  r.get_enum("mode", detail::kModeNames, s.mode);
  r.get_enum("estimator", detail::kEstimatorNames, s.estimator);
  r.get("max_lag_sources", s.max_lag_sources);
  r.get("min_lag_sources", s.min_lag_sources);
  r.get("max_lag_target", s.max_lag_target);
  r.get("tau_sources", s.tau_sources);
  r.get("tau_target", s.tau_target);
  r.get("alpha_max_stat", s.alpha_max_stat);
  r.get("alpha_min_stat", s.alpha_min_stat);
  r.get("alpha_omnibus", s.alpha_omnibus);
  r.get("alpha_max_seq", s.alpha_max_seq);
  r.get("alpha_fdr", s.alpha_fdr);
  r.get("n_perm_max_stat", s.n_perm_max_stat);
  r.get("n_perm_min_stat", s.n_perm_min_stat);
  r.get("n_perm_omnibus", s.n_perm_omnibus);
  r.get("n_perm_max_seq", s.n_perm_max_seq);
  r.get("knn_k", s.knn_k);
  r.get("noise_amplitude", s.noise_amplitude);
  r.get("discrete_state_cap", s.discrete_state_cap);
  if (r.has("surrogate")) {
    const json& v = r.raw("surrogate");
    if (!v.is_null()) {
      if (!v.is_string()) fail(ErrorKind::Config, "key '" + r.qualified("surrogate") + "': expected a string or null");
      s.surrogate = detail::parse_name(detail::kSurrogateNames, v.get<std::string>(), r.qualified("surrogate"));
    }
  }
  r.get("seed", s.seed);
  r.finish();
  try {
    s.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Config, where + ": " + e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Results

inline json to_json(const VariableRef& v) { return json{{"process", v.process}, {"lag", v.lag}}; }

inline json to_json(const TestResult& t) {
  return json{{"statistic", t.statistic_observed},
              {"p_value", t.p_value},
              {"significant", t.significant},
              {"n_permutations", t.n_permutations},
              {"alpha", t.alpha}};
}

inline json to_json(const TargetResult& t) {
  json past = json::array();
  for (const auto& v : t.selected_target_past) past.push_back(to_json(v));
  json sources = json::array();
  for (const auto& s : t.selected_sources)
    sources.push_back(json{{"process", s.variable.process},
                           {"lag", s.variable.lag},
                           {"cmi_bits", s.cmi_bits},
                           {"p_value", s.p_value}});
  json delays = json::array();
  for (const auto& [p, d] : t.per_source_delay) delays.push_back(json{{"process", p}, {"delay", d}});
  return json{{"target", t.target},
              {"selected_target_past", past},
              {"selected_sources", sources},
              {"omnibus", to_json(t.omnibus)},
              {"per_source_delay", delays}};
}

inline json to_json(const Link& l) {
  return json{{"source", l.source},          {"target", l.target}, {"weight_bits", l.weight_bits},
              {"delay", l.delay},            {"p_value", l.p_value},
              {"fdr_significant", l.fdr_significant}};
}

/// Full result document. `runtime_seconds` is always present and null
/// unless a duration is supplied.
inline json to_json(const NetworkResult& net, const InferenceSettings& s,
                    std::optional<double> runtime_seconds = std::nullopt) {
  json targets = json::array();
  for (const auto& t : net.targets) targets.push_back(to_json(t));
  json links = json::array();
  for (const auto& l : net.links) links.push_back(to_json(l));
  return json{{"settings", to_json(s)},
              {"seed", s.seed},
              {"n_processes", net.n_processes},
              {"links_tested", net.links_tested},
              {"targets", targets},
              {"links", links},
              {"runtime_seconds", runtime_seconds ? json(*runtime_seconds) : json(nullptr)}};
}

namespace detail {

inline VariableRef variable_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  VariableRef v{r.require<std::size_t>("process"), r.require<std::size_t>("lag")};
  r.finish();
  return v;
}

inline TestResult test_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  TestResult t;
  t.statistic_observed = r.require<double>("statistic");
  t.p_value = r.require<double>("p_value");
  t.significant = r.require<bool>("significant");
  t.n_permutations = r.require<std::size_t>("n_permutations");
  t.alpha = r.require<double>("alpha");
  r.finish();
  return t;
}

inline const json& require_array(ObjectReader& r, const std::string& key) {
  if (!r.has(key)) fail(ErrorKind::Config, "missing required key '" + r.qualified(key) + "'");
  const json& a = r.raw(key);
  if (!a.is_array()) fail(ErrorKind::Config, "key '" + r.qualified(key) + "': expected an array");
  return a;
}

}  // namespace detail

inline TargetResult target_from_json(const json& j, const InferenceSettings& s, const std::string& where) {
  ObjectReader r(j, where);
  TargetResult t;
  t.settings = s;
  t.target = r.require<std::size_t>("target");
  for (const auto& v : detail::require_array(r, "selected_target_past"))
    t.selected_target_past.push_back(detail::variable_from_json(v, where + ".selected_target_past"));
  for (const auto& v : detail::require_array(r, "selected_sources")) {
    ObjectReader sr(v, where + ".selected_sources");
    SelectedSource src;
    src.variable = VariableRef{sr.require<std::size_t>("process"), sr.require<std::size_t>("lag")};
    src.cmi_bits = sr.require<double>("cmi_bits");
    src.p_value = sr.require<double>("p_value");
    sr.finish();
    t.selected_sources.push_back(src);
  }
  t.omnibus = detail::test_from_json(r.raw("omnibus"), where + ".omnibus");
  for (const auto& v : detail::require_array(r, "per_source_delay")) {
    ObjectReader dr(v, where + ".per_source_delay");
    const auto p = dr.require<std::size_t>("process");
    t.per_source_delay[p] = dr.require<std::size_t>("delay");
    dr.finish();
  }
  r.finish();
  return t;
}

struct NetworkDocument {
  NetworkResult network;
  InferenceSettings settings;
  std::optional<double> runtime_seconds;
};

inline NetworkDocument network_from_json(const json& j) {
  ObjectReader r(j, "result");
  NetworkDocument doc;
  doc.settings = settings_from_json(r.raw("settings"), "result.settings");
  const auto seed = r.require<std::uint64_t>("seed");
  if (seed != doc.settings.seed) fail(ErrorKind::Config, "result: top-level seed differs from settings.seed");
  doc.network.n_processes = r.require<std::size_t>("n_processes");
  doc.network.links_tested = r.require<std::size_t>("links_tested");
  for (const auto& t : detail::require_array(r, "targets"))
    doc.network.targets.push_back(target_from_json(t, doc.settings, "result.targets"));
  for (const auto& v : detail::require_array(r, "links")) {
    ObjectReader lr(v, "result.links");
    Link l;
    l.source = lr.require<std::size_t>("source");
    l.target = lr.require<std::size_t>("target");
    l.weight_bits = lr.require<double>("weight_bits");
    l.delay = lr.require<std::size_t>("delay");
    l.p_value = lr.require<double>("p_value");
    l.fdr_significant = lr.require<bool>("fdr_significant");
    lr.finish();
    if (l.source >= doc.network.n_processes || l.target >= doc.network.n_processes)
      fail(ErrorKind::Config, "result.links: process index out of range");
    doc.network.links.push_back(l);
  }
  if (!r.has("runtime_seconds")) fail(ErrorKind::Config, "result: missing required key 'runtime_seconds'");
  const json& rt = r.raw("runtime_seconds");
  if (!rt.is_null()) {
    if (!rt.is_number()) fail(ErrorKind::Config, "key 'result.runtime_seconds': expected a number or null");
    doc.runtime_seconds = rt.get<double>();
  }
  r.finish();
  return doc;
}

inline json to_json(const AisResult& a, bool with_local) {
  json emb = json::array();
  for (const auto& v : a.embedding) emb.push_back(to_json(v));
  json j{{"process", a.process}, {"ais_bits", a.ais_bits}, {"embedding", emb}, {"test", to_json(a.test)}};
  if (with_local) j["local"] = a.local;
  return j;
}

inline json to_json(const PidAtoms& p) {
  return json{{"redundancy", p.redundancy}, {"unique_1", p.unique_1}, {"unique_2", p.unique_2},
              {"synergy", p.synergy},       {"mi_s1", p.mi_s1},       {"mi_s2", p.mi_s2},
              {"mi_joint", p.mi_joint}};
}

inline json to_json(const LinkComparison& c) {
  return json{{"source", c.source}, {"target", c.target},   {"delay", c.delay},       {"cmi_a", c.cmi_a},
              {"cmi_b", c.cmi_b},   {"delta", c.delta},     {"p_value", c.p_value},
              {"fdr_significant", c.fdr_significant}};
}

// ---------------------------------------------------------------------------
// Ground truth: the generator settings, with links in the same
// {source, target, delay} schema as inferred links.

inline json to_json(const GroundTruthSpec& g) {
  json links = json::array();
  for (const auto& l : g.topology)
    links.push_back(json{{"source", l.source}, {"target", l.target}, {"delay", l.lag}, {"coefficient", l.coefficient}});
  return json{{"generator", to_string(g.generator)},
              {"n_processes", g.n_processes},
              {"n_samples", g.n_samples},
              {"n_replications", g.n_replications},
              {"seed", g.seed},
              {"noise_scale", g.noise_scale},
              {"burn_in", g.burn_in},
              {"binarize", g.binarize},
              {"links", links}};
}

/// Reads the generator fields of `r`; the caller finishes the reader, so
/// the same object may carry additional keys it consumes itself.
inline GroundTruthSpec ground_truth_from_reader(ObjectReader& r) {
  GroundTruthSpec g;
  r.get_enum("generator", detail::kGeneratorNames, g.generator);
  g.n_processes = r.require<std::size_t>("n_processes");
  r.get("n_samples", g.n_samples);
  r.get("n_replications", g.n_replications);
  r.get("seed", g.seed);
  r.get("noise_scale", g.noise_scale);
  r.get("burn_in", g.burn_in);
  r.get("binarize", g.binarize);
  if (r.has("links")) {
    const json& links = r.raw("links");
    if (!links.is_array()) fail(ErrorKind::Config, "key '" + r.qualified("links") + "': expected an array");
    for (const auto& v : links) {
      ObjectReader lr(v, r.qualified("links"));
      TopologyLink l;
      l.source = lr.require<std::size_t>("source");
      l.target = lr.require<std::size_t>("target");
      l.lag = lr.require<std::size_t>("delay");
      l.coefficient = lr.require<double>("coefficient");
      lr.finish();
      g.topology.push_back(l);
    }
  }
  if (g.binarize && g.generator != GeneratorKind::logistic_map_network)
    fail(ErrorKind::Config, "key '" + r.qualified("binarize") + "': only logistic_map_network output can be binarized");
  try {
    validate_topology(g);
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }
  return g;
}

inline GroundTruthSpec ground_truth_from_json(const json& j) {
  ObjectReader r(j, "ground_truth");
  GroundTruthSpec g = ground_truth_from_reader(r);
  r.finish();
  return g;
}

}  // namespace infodyn
