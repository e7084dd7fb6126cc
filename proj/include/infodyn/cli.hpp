#pragma once

#include <CLI11.hpp>

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "infodyn/ais.hpp"
#include "infodyn/compare.hpp"
#include "infodyn/data.hpp"
#include "infodyn/error.hpp"
#include "infodyn/export.hpp"
#include "infodyn/generate.hpp"
#include "infodyn/inference.hpp"
#include "infodyn/io.hpp"
#include "infodyn/parallel.hpp"
#include "infodyn/pid.hpp"

namespace infodyn::cli {

enum ExitCode : int { kOk = 0, kUnexpected = 1, kConfigError = 2, kDataError = 3 };

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string output;
  std::string format = "json";
  bool timing = false;
};

namespace detail {

namespace fs = std::filesystem;

inline fs::path resolve(const fs::path& base_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

struct LoadedConfig {
  json doc;
  fs::path dir;
};

inline LoadedConfig load_config(const std::string& path) {
  if (path.empty()) fail(ErrorKind::Config, "--config is required");
  LoadedConfig c;
  c.doc = parse_json_file(path, ErrorKind::Config);
  c.dir = fs::absolute(fs::path(path)).parent_path();
  return c;
}

inline std::vector<fs::path> read_paths(ObjectReader& r, const std::string& key, const fs::path& dir) {
  if (!r.has(key)) fail(ErrorKind::Config, "missing required key '" + r.qualified(key) + "'");
  const json& v = r.raw(key);
  std::vector<fs::path> out;
  if (v.is_string()) {
    out.push_back(resolve(dir, v.get<std::string>()));
  } else if (v.is_array() && !v.empty()) {
    for (const auto& e : v) {
      if (!e.is_string()) fail(ErrorKind::Config, "key '" + r.qualified(key) + "': expected file names");
      out.push_back(resolve(dir, e.get<std::string>()));
    }
  } else {
    fail(ErrorKind::Config, "key '" + r.qualified(key) + "': expected a file name or a non-empty list of them");
  }
  return out;
}

inline CsvOptions read_csv_options(ObjectReader& r) {
  CsvOptions o;
  std::string kind = "continuous";
  r.get("kind", kind);
  if (kind == "continuous") {
    o.kind = DataKind::continuous;
  } else if (kind == "discrete") {
    o.kind = DataKind::discrete;
  } else {
    fail(ErrorKind::Config, "key '" + r.qualified("kind") + "': expected continuous or discrete");
  }
  r.get("alphabet_size", o.alphabet_size);
  if (o.kind == DataKind::discrete && o.alphabet_size == 0)
    fail(ErrorKind::Config, "key '" + r.qualified("alphabet_size") + "': discrete data needs a positive alphabet size");
  std::string mode = "single";
  r.get("replication_mode", mode);
  if (mode == "single") {
    o.replication_mode = ReplicationMode::single;
  } else if (mode == "rep_column") {
    o.replication_mode = ReplicationMode::rep_column;
  } else if (mode == "per_file") {
    o.replication_mode = ReplicationMode::per_file;
  } else {
    fail(ErrorKind::Config, "key '" + r.qualified("replication_mode") + "': expected single, rep_column or per_file");
  }
  return o;
}

inline Dataset load_input(const std::vector<fs::path>& files, const CsvOptions& csv, bool normalize_data,
                          std::ostream& log) {
  Dataset d = load_csv(files, csv);
  if (normalize_data && d.kind() == DataKind::continuous) {
    d = normalize(d);
    for (const auto& [p, r] : d.constant_series())
      log << "warning: process " << p << " is constant in replication " << r << "\n";
  }
  log << "loaded " << d.n_processes() << " processes x " << d.n_samples() << " samples x " << d.n_replications()
      << " replications\n";
  return d;
}

inline void emit(const std::string& text, const std::string& output, std::ostream& out) {
  if (output.empty()) {
    out << text;
    return;
  }
  std::ofstream f(output, std::ios::binary);
  if (!f || !(f << text)) fail(ErrorKind::Io, "cannot write " + output);
}

inline std::string output_path(const CommonFlags& flags, ObjectReader& r, const fs::path& dir) {
  std::string cfg;
  r.get("output", cfg);
  if (!flags.output.empty()) return flags.output;
  return cfg.empty() ? std::string() : resolve(dir, cfg).string();
}

inline void require_json_format(const CommonFlags& flags, const char* command) {
  if (flags.format != "json")
    fail(ErrorKind::Config, std::string(command) + " only supports --format json");
}

inline std::string render_network(const NetworkResult& net, const InferenceSettings& s,
                                  std::optional<double> runtime, const std::string& format) {
  if (format == "dot") return to_dot(net);
  if (format == "csv") return to_csv_adjacency(net);
  return canonical_dump(to_json(net, s, runtime));
}

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------------------

inline int cmd_generate(const CommonFlags& flags, std::ostream& log) {
  auto cfg = load_config(flags.config);
  ObjectReader r(cfg.doc, "config");
  GroundTruthSpec g = ground_truth_from_reader(r);
  const std::string output = output_path(flags, r, cfg.dir);
  r.finish();
  require_json_format(flags, "generate");
  if (output.empty()) fail(ErrorKind::Config, "generate needs an output path (--output or key 'output')");
  if (flags.seed) g.seed = *flags.seed;

  const Dataset d = generate(g);
  write_csv(d, output);
  fs::path truth = fs::path(output);
  truth.replace_extension(".truth.json");
  emit(canonical_dump(to_json(g)), truth.string(), log);
  log << "generate: wrote " << output << " and " << truth.string() << "\n";
  return kOk;
}

inline int cmd_infer(const CommonFlags& flags, std::ostream& out, std::ostream& log) {
  auto cfg = load_config(flags.config);
  ObjectReader r(cfg.doc, "config");
  const auto files = read_paths(r, "input", cfg.dir);
  const CsvOptions csv = read_csv_options(r);
  bool normalize_data = true;
  r.get("normalize", normalize_data);
  InferenceSettings s;
  if (r.has("settings")) s = settings_from_json(r.raw("settings"));
  bool record_runtime = false;
  r.get("record_runtime", record_runtime);
  std::string format = "json";
  r.get("format", format);
  if (flags.format != "json") format = flags.format;
  const std::string output = output_path(flags, r, cfg.dir);
  r.finish();
  if (format != "json" && format != "dot" && format != "csv")
    fail(ErrorKind::Config, "unknown format '" + format + "' (expected json, dot or csv)");
  if (flags.seed) s.seed = *flags.seed;

  const auto start = Clock::now();
  const Dataset d = load_input(files, csv, normalize_data, log);
  std::vector<TargetResult> targets;
  for (std::size_t t = 0; t < d.n_processes(); ++t) {
    targets.push_back(infer_target(d, t, s));
    log << "infer: target " << t + 1 << "/" << d.n_processes() << " done, " << targets.back().selected_sources.size()
        << " source variable(s)\n";
  }
  const NetworkResult net = assemble_network(d.n_processes(), std::move(targets), s.alpha_fdr);
  std::optional<double> runtime;
  if (flags.timing || record_runtime) runtime = seconds_since(start);
  log << "infer: " << net.adjacency().size() << " link(s) after FDR\n";
  emit(render_network(net, s, runtime, format), output, out);
  return kOk;
}

inline int cmd_ais(const CommonFlags& flags, std::ostream& out, std::ostream& log) {
  auto cfg = load_config(flags.config);
  ObjectReader r(cfg.doc, "config");
  const auto files = read_paths(r, "input", cfg.dir);
  const CsvOptions csv = read_csv_options(r);
  bool normalize_data = true;
  r.get("normalize", normalize_data);
  InferenceSettings s;
  if (r.has("settings")) s = settings_from_json(r.raw("settings"));
  std::vector<std::size_t> processes;
  if (r.has("processes")) {
    const json& v = r.raw("processes");
    if (!v.is_array()) fail(ErrorKind::Config, "key 'config.processes': expected an array of indices");
    for (const auto& e : v) {
      if (!e.is_number_unsigned()) fail(ErrorKind::Config, "key 'config.processes': expected non-negative integers");
      processes.push_back(e.get<std::size_t>());
    }
  }
  bool local_values = false;
  r.get("local_values", local_values);
  bool record_runtime = false;
  r.get("record_runtime", record_runtime);
  const std::string output = output_path(flags, r, cfg.dir);
  r.finish();
  require_json_format(flags, "ais");
  if (flags.seed) s.seed = *flags.seed;

  const auto start = Clock::now();
  const Dataset d = load_input(files, csv, normalize_data, log);
  if (processes.empty())
    for (std::size_t p = 0; p < d.n_processes(); ++p) processes.push_back(p);
  json results = json::array();
  for (std::size_t p : processes) {
    if (p >= d.n_processes()) fail(ErrorKind::Config, "key 'config.processes': index " + std::to_string(p) + " out of range");
    const AisResult a = ais_estimate(d, p, s);
    log << "ais: process " << p << " done, " << a.embedding.size() << " past variable(s)\n";
    results.push_back(to_json(a, local_values));
  }
  json doc{{"settings", to_json(s)}, {"seed", s.seed}, {"results", results}, {"runtime_seconds", nullptr}};
  if (flags.timing || record_runtime) doc["runtime_seconds"] = seconds_since(start);
  emit(canonical_dump(doc), output, out);
  return kOk;
}

inline int cmd_pid(const CommonFlags& flags, const std::string& input_flag, std::optional<std::size_t> alphabet_flag,
                   std::ostream& out, std::ostream& log) {
  std::vector<fs::path> files;
  std::size_t alphabet = 2;
  std::string output = flags.output;
  if (!flags.config.empty()) {
    auto cfg = load_config(flags.config);
    ObjectReader r(cfg.doc, "config");
    if (r.has("input")) files = read_paths(r, "input", cfg.dir);
    r.get("alphabet_size", alphabet);
    output = output_path(flags, r, cfg.dir);
    r.finish();
  }
  if (!input_flag.empty()) files = {fs::path(input_flag)};
  if (files.empty()) fail(ErrorKind::Config, "pid needs --input or a config with key 'input'");
  if (alphabet_flag) alphabet = *alphabet_flag;
  if (alphabet < 1) fail(ErrorKind::Config, "alphabet size must be positive");
  require_json_format(flags, "pid");

  CsvOptions csv;
  csv.kind = DataKind::discrete;
  csv.alphabet_size = alphabet;
  const Dataset d = load_csv(files, csv);
  if (d.n_processes() != 3) fail(ErrorKind::InvalidValue, "pid input needs exactly three columns (s1, s2, t)");
  auto pooled = [&](std::size_t p) {
    std::vector<double> v;
    for (std::size_t r = 0; r < d.n_replications(); ++r) {
      const auto s = d.series(p, r);
      v.insert(v.end(), s.begin(), s.end());
    }
    return v;
  };
  const auto s1 = pooled(0), s2 = pooled(1), t = pooled(2);
  const PidAtoms atoms = pid_from_data(s1, s2, t, alphabet);
  log << "pid: " << s1.size() << " observations\n";
  emit(canonical_dump(to_json(atoms)), output, out);
  return kOk;
}

inline int cmd_compare(const CommonFlags& flags, std::ostream& out, std::ostream& log) {
  auto cfg = load_config(flags.config);
  ObjectReader r(cfg.doc, "config");
  const auto files_a = read_paths(r, "input_a", cfg.dir);
  const auto files_b = read_paths(r, "input_b", cfg.dir);
  const CsvOptions csv = read_csv_options(r);
  bool normalize_data = true;
  r.get("normalize", normalize_data);
  std::string network_a, network_b;
  r.get("network_a", network_a);
  r.get("network_b", network_b);
  CompareSettings cs;
  if (r.has("settings")) cs.estimation = settings_from_json(r.raw("settings"));
  cs.alpha = cs.estimation.alpha_fdr;
  r.get("n_perm", cs.n_perm);
  r.get("alpha", cs.alpha);
  const std::string output = output_path(flags, r, cfg.dir);
  r.finish();
  require_json_format(flags, "compare");
  if (flags.seed) cs.estimation.seed = *flags.seed;
  try {
    check_permutations(cs.n_perm, cs.alpha);
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }

  const Dataset a = load_input(files_a, csv, normalize_data, log);
  const Dataset b = load_input(files_b, csv, normalize_data, log);
  auto network_of = [&](const std::string& file, const Dataset& d, const char* label) {
    if (!file.empty()) return network_from_json(parse_json_file(resolve(cfg.dir, file), ErrorKind::Config)).network;
    log << "compare: inferring network for condition " << label << "\n";
    return infer_network(d, cs.estimation);
  };
  const NetworkResult na = network_of(network_a, a, "a");
  const NetworkResult nb = network_of(network_b, b, "b");
  const auto links = union_link_structures(na, nb);
  log << "compare: " << links.size() << " link(s) in the union network\n";
  const auto cmp = compare_networks(a, b, links, cs);
  json arr = json::array();
  for (const auto& c : cmp) arr.push_back(to_json(c));
  json doc{{"settings", to_json(cs.estimation)},
           {"seed", cs.estimation.seed},
           {"n_perm", cs.n_perm},
           {"alpha", cs.alpha},
           {"links", arr},
           {"runtime_seconds", nullptr}};
  emit(canonical_dump(doc), output, out);
  return kOk;
}

inline int cmd_export(const CommonFlags& flags, const std::string& input, std::ostream& out) {
  if (input.empty()) fail(ErrorKind::Config, "export needs --input <result.json>");
  if (flags.format != "json" && flags.format != "dot" && flags.format != "csv")
    fail(ErrorKind::Config, "unknown format '" + flags.format + "' (expected json, dot or csv)");
  NetworkDocument doc;
  try {
    doc = network_from_json(parse_json_file(input, ErrorKind::InvalidValue));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Config) throw;
    fail(ErrorKind::InvalidValue, input + ": not a network result (" + e.what() + ")");
  }
  emit(render_network(doc.network, doc.settings, doc.runtime_seconds, flags.format), flags.output, out);
  return kOk;
}

}  // namespace detail

/// Entry point of the command-line tool; returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Information-dynamics network inference"};
  app.require_subcommand(1, 1);
  CommonFlags flags;
  std::string input;
  std::optional<std::size_t> alphabet;

  auto add_common = [&](CLI::App* sub, bool with_seed, bool with_threads) {
    sub->add_option("--config", flags.config, "JSON configuration file");
    if (with_seed) sub->add_option("--seed", flags.seed, "Master seed, overrides the configuration");
    if (with_threads) sub->add_option("--threads", flags.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--output", flags.output, "Output file (default: standard output)");
    sub->add_option("--format", flags.format, "Output format")->check(CLI::IsMember({"json", "dot", "csv"}));
  };
  auto* gen = app.add_subcommand("generate", "Synthetic data with known ground truth");
  add_common(gen, true, false);
  auto* infer = app.add_subcommand("infer", "Network inference");
  add_common(infer, true, true);
  infer->add_flag("--timing", flags.timing, "Record runtime_seconds in the output");
  auto* ais = app.add_subcommand("ais", "Active information storage per process");
  add_common(ais, true, true);
  ais->add_flag("--timing", flags.timing, "Record runtime_seconds in the output");
  auto* pid = app.add_subcommand("pid", "Two-source partial information decomposition of a 3-column discrete CSV");
  add_common(pid, false, false);
  pid->add_option("--input", input, "CSV with columns s1, s2, t");
  pid->add_option("--alphabet", alphabet, "Alphabet size (default 2)");
  auto* cmp = app.add_subcommand("compare", "Link-wise comparison of two conditions");
  add_common(cmp, true, true);
  auto* exp = app.add_subcommand("export", "Convert a result JSON to json, dot or csv");
  add_common(exp, false, false);
  exp->add_option("--input", input, "Result JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  try {
    set_num_threads(flags.threads);
    if (gen->parsed()) return detail::cmd_generate(flags, err);
    if (infer->parsed()) return detail::cmd_infer(flags, out, err);
    if (ais->parsed()) return detail::cmd_ais(flags, out, err);
    if (pid->parsed()) return detail::cmd_pid(flags, input, alphabet, out, err);
    if (cmp->parsed()) return detail::cmd_compare(flags, out, err);
    if (exp->parsed()) return detail::cmd_export(flags, input, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return e.kind() == ErrorKind::Config ? kConfigError : kDataError;
  } catch (const std::exception& e) {
    err << "unexpected error: " << e.what() << "\n";
    return kUnexpected;
  }
  return kUnexpected;
}

}  // namespace infodyn::cli
