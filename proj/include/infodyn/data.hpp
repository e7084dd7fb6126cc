#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "infodyn/error.hpp"

namespace infodyn {

enum class DataKind { continuous, discrete };

/// One candidate past variable: a process observed `lag` samples before the
/// target's current sample.
struct VariableRef {
  std::size_t process = 0;
  std::size_t lag = 1;

  friend auto operator<=>(const VariableRef&, const VariableRef&) = default;
};

/// Multivariate time series indexed (process, sample, replication).
///
/// Values are held in that axis order, row-major. The container is immutable
/// after construction and validated on entry: finite values only, and for
/// discrete data integers in [0, alphabet_size).
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::size_t n_processes, std::size_t n_samples, std::size_t n_replications,
          std::vector<double> values, DataKind kind = DataKind::continuous,
          std::size_t alphabet_size = 0)
      : n_processes_(n_processes),
        n_samples_(n_samples),
        n_replications_(n_replications),
        kind_(kind),
        alphabet_size_(alphabet_size),
        values_(std::move(values)) {
    if (n_processes_ == 0 || n_samples_ == 0 || n_replications_ == 0)
      fail(ErrorKind::InvalidArgument, "dataset axes must all be non-empty");
    if (values_.size() != n_processes_ * n_samples_ * n_replications_)
      fail(ErrorKind::InvalidArgument, "value count does not match axis lengths");
    if (kind_ == DataKind::discrete && alphabet_size_ == 0)
      fail(ErrorKind::InvalidArgument, "discrete data needs a positive alphabet size");
    for (double v : values_) {
      if (!std::isfinite(v)) fail(ErrorKind::InvalidValue, "non-finite value in dataset");
      if (kind_ == DataKind::discrete &&
          (v != std::floor(v) || v < 0 || v >= static_cast<double>(alphabet_size_)))
        fail(ErrorKind::InvalidValue, "discrete value " + std::to_string(v) +
                                          " outside alphabet of size " +
                                          std::to_string(alphabet_size_));
    }
  }

  /// Single-replication convenience: series[p][t].
  static Dataset from_processes(const std::vector<std::vector<double>>& series,
                                DataKind kind = DataKind::continuous,
                                std::size_t alphabet_size = 0) {
    if (series.empty() || series.front().empty())
      fail(ErrorKind::InvalidArgument, "empty process list");
    const std::size_t t_len = series.front().size();
    std::vector<double> values;
    values.reserve(series.size() * t_len);
    for (const auto& s : series) {
      if (s.size() != t_len) fail(ErrorKind::InvalidArgument, "process series differ in length");
      values.insert(values.end(), s.begin(), s.end());
    }
    return Dataset(series.size(), t_len, 1, std::move(values), kind, alphabet_size);
  }

  /// Stacks datasets of equal shape along the replication axis.
  static Dataset concat_replications(const std::vector<Dataset>& parts) {
    if (parts.empty()) fail(ErrorKind::InvalidArgument, "nothing to concatenate");
    const Dataset& first = parts.front();
    std::size_t total_reps = 0;
    for (const auto& d : parts) {
      if (d.n_processes() != first.n_processes() || d.n_samples() != first.n_samples() ||
          d.kind() != first.kind() || d.alphabet_size() != first.alphabet_size())
        fail(ErrorKind::InvalidValue, "replications must share shape and kind");
      total_reps += d.n_replications();
    }
    std::vector<double> values(first.n_processes() * first.n_samples() * total_reps);
    std::size_t rep_offset = 0;
    for (const auto& d : parts) {
      for (std::size_t p = 0; p < d.n_processes(); ++p)
        for (std::size_t t = 0; t < d.n_samples(); ++t)
          for (std::size_t r = 0; r < d.n_replications(); ++r)
            values[(p * first.n_samples() + t) * total_reps + rep_offset + r] = d.at(p, t, r);
      rep_offset += d.n_replications();
    }
    return Dataset(first.n_processes(), first.n_samples(), total_reps, std::move(values),
                   first.kind(), first.alphabet_size());
  }

  std::size_t n_processes() const noexcept { return n_processes_; }
  std::size_t n_samples() const noexcept { return n_samples_; }
  std::size_t n_replications() const noexcept { return n_replications_; }
  DataKind kind() const noexcept { return kind_; }
  std::size_t alphabet_size() const noexcept { return alphabet_size_; }
  bool normalized() const noexcept { return normalized_; }

  /// (process, replication) pairs that were constant when normalized.
  const std::vector<std::pair<std::size_t, std::size_t>>& constant_series() const noexcept {
    return constant_series_;
  }

  double at(std::size_t p, std::size_t t, std::size_t r) const {
    return values_[(p * n_samples_ + t) * n_replications_ + r];
  }

  std::vector<double> series(std::size_t p, std::size_t r) const {
    std::vector<double> out(n_samples_);
    for (std::size_t t = 0; t < n_samples_; ++t) out[t] = at(p, t, r);
    return out;
  }

  const std::vector<double>& values() const noexcept { return values_; }

  /// A dataset holding only the given replications, in the given order.
  Dataset select_replications(std::span<const std::size_t> reps) const {
    if (reps.empty()) fail(ErrorKind::InvalidArgument, "no replications selected");
    std::vector<double> values(n_processes_ * n_samples_ * reps.size());
    for (std::size_t p = 0; p < n_processes_; ++p)
      for (std::size_t t = 0; t < n_samples_; ++t)
        for (std::size_t i = 0; i < reps.size(); ++i) {
          if (reps[i] >= n_replications_)
            fail(ErrorKind::InvalidArgument, "replication index out of range");
          values[(p * n_samples_ + t) * reps.size() + i] = at(p, t, reps[i]);
        }
    return Dataset(n_processes_, n_samples_, reps.size(), std::move(values), kind_,
                   alphabet_size_);
  }

 private:
  friend Dataset normalize(const Dataset&);

  std::size_t n_processes_ = 0;
  std::size_t n_samples_ = 0;
  std::size_t n_replications_ = 0;
  DataKind kind_ = DataKind::continuous;
  std::size_t alphabet_size_ = 0;
  bool normalized_ = false;
  std::vector<double> values_;
  std::vector<std::pair<std::size_t, std::size_t>> constant_series_;
};

/// Z-scores every (process, replication) series with the n-1 standard
/// deviation. Constant series become all zeros and are flagged.
inline Dataset normalize(const Dataset& in) {
  if (in.kind() != DataKind::continuous)
    fail(ErrorKind::InvalidArgument, "normalize requires continuous data");
  std::vector<double> values = in.values();
  std::vector<std::pair<std::size_t, std::size_t>> constant;
  const std::size_t T = in.n_samples();
  const std::size_t R = in.n_replications();
  for (std::size_t p = 0; p < in.n_processes(); ++p) {
    for (std::size_t r = 0; r < R; ++r) {
      auto idx = [&](std::size_t t) { return (p * T + t) * R + r; };
      double mean = 0.0;
      for (std::size_t t = 0; t < T; ++t) mean += values[idx(t)];
      mean /= static_cast<double>(T);
      double ss = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        const double d = values[idx(t)] - mean;
        ss += d * d;
      }
      const double sd = T > 1 ? std::sqrt(ss / static_cast<double>(T - 1)) : 0.0;
      if (!(sd > 0.0) || sd <= 1e-300) {
        for (std::size_t t = 0; t < T; ++t) values[idx(t)] = 0.0;
        constant.emplace_back(p, r);
        continue;
      }
      for (std::size_t t = 0; t < T; ++t) values[idx(t)] = (values[idx(t)] - mean) / sd;
    }
  }
  Dataset out(in.n_processes(), T, R, std::move(values), DataKind::continuous, 0);
  out.normalized_ = true;
  out.constant_series_ = std::move(constant);
  return out;
}

/// Row structure shared by every column of one realization: replications are
/// stacked, each contributing the same number of consecutive rows.
struct RowLayout {
  std::size_t n_replications = 1;
  std::size_t rows_per_replication = 0;

  std::size_t rows() const noexcept { return n_replications * rows_per_replication; }
  friend bool operator==(const RowLayout&, const RowLayout&) = default;
};

/// Observation-by-variable table extracted from a dataset. Columns are
/// stored separately so estimators can take spans over them.
struct Realization {
  RowLayout layout;
  std::vector<VariableRef> variables;
  std::vector<std::vector<double>> columns;  // parallel to `variables`
  std::vector<double> present;               // empty when no target was extracted

  std::size_t rows() const noexcept { return layout.rows(); }
  std::size_t replication_of_row(std::size_t row) const {
    return row / layout.rows_per_replication;
  }
};

namespace detail {
inline void check_embedding(const Dataset& d, std::size_t first_sample,
                            std::span<const VariableRef> vars) {
  if (first_sample >= d.n_samples())
    fail(ErrorKind::InsufficientSamples,
         "no current samples remain after the first " + std::to_string(first_sample));
  for (const auto& v : vars) {
    if (v.process >= d.n_processes())
      fail(ErrorKind::InvalidArgument, "variable refers to process " + std::to_string(v.process));
    if (v.lag == 0) fail(ErrorKind::InvalidArgument, "variable lag must be at least 1");
    if (v.lag > first_sample)
      fail(ErrorKind::InsufficientSamples,
           "lag " + std::to_string(v.lag) + " exceeds the first current sample " +
               std::to_string(first_sample));
  }
}

inline std::vector<double> lagged_column(const Dataset& d, std::size_t process, std::size_t lag,
                                         std::size_t first_sample) {
  const std::size_t per_rep = d.n_samples() - first_sample;
  std::vector<double> col(per_rep * d.n_replications());
  std::size_t row = 0;
  for (std::size_t r = 0; r < d.n_replications(); ++r)
    for (std::size_t t = first_sample; t < d.n_samples(); ++t) col[row++] = d.at(process, t - lag, r);
  return col;
}
}  // namespace detail

/// Column of `process` at lag 0 (lag >= 1 for past variables) over the
/// current-sample range [first_sample, n_samples) of every replication.
inline std::vector<double> embed_column(const Dataset& d, VariableRef var, std::size_t first_sample) {
  detail::check_embedding(d, first_sample, std::span<const VariableRef>(&var, 1));
  return detail::lagged_column(d, var.process, var.lag, first_sample);
}

/// Extracts the target's present plus each variable's past value for every
/// current sample t in [first_sample, n_samples) of every replication.
inline Realization embed(const Dataset& d, std::size_t target, std::size_t first_sample,
                         std::span<const VariableRef> vars) {
  if (target >= d.n_processes())
    fail(ErrorKind::InvalidArgument, "target process " + std::to_string(target) + " out of range");
  detail::check_embedding(d, first_sample, vars);
  Realization out;
  out.layout = {d.n_replications(), d.n_samples() - first_sample};
  out.present = detail::lagged_column(d, target, 0, first_sample);
  out.variables.assign(vars.begin(), vars.end());
  out.columns.reserve(vars.size());
  for (const auto& v : vars) out.columns.push_back(detail::lagged_column(d, v.process, v.lag, first_sample));
  return out;
}

/// Variables only, no present column. An empty variable list is an error.
inline Realization embed_variables(const Dataset& d, std::size_t first_sample,
                                   std::span<const VariableRef> vars) {
  if (vars.empty()) fail(ErrorKind::InvalidArgument, "empty variable list");
  detail::check_embedding(d, first_sample, vars);
  Realization out;
  out.layout = {d.n_replications(), d.n_samples() - first_sample};
  out.variables.assign(vars.begin(), vars.end());
  for (const auto& v : vars) out.columns.push_back(detail::lagged_column(d, v.process, v.lag, first_sample));
  return out;
}

/// Adds i.i.d. uniform jitter in [-amplitude, amplitude] to `values`.
inline void add_noise_inplace(std::span<double> values, double amplitude, std::uint64_t seed) {
  if (amplitude == 0.0) return;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  for (double& v : values) v += u(rng);
}

inline Realization add_noise(Realization r, double amplitude, std::uint64_t seed) {
  std::mt19937_64 seeder(seed);
  add_noise_inplace(r.present, amplitude, seeder());
  for (auto& c : r.columns) add_noise_inplace(c, amplitude, seeder());
  return r;
}

// ---------------------------------------------------------------------------
// CSV

enum class ReplicationMode { single, rep_column, per_file };

struct CsvOptions {
  DataKind kind = DataKind::continuous;
  std::size_t alphabet_size = 0;
  ReplicationMode replication_mode = ReplicationMode::single;
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r'))
      cell.remove_suffix(1);
    cells.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline std::optional<double> parse_number(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  const char* begin = cell.data();
  if (*begin == '+') ++begin;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(begin, cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return v;
}

struct CsvTable {
  std::vector<std::string> header;  // empty when the file has none
  std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  CsvTable table;
  std::string line;
  std::size_t width = 0;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (first && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
      line.erase(0, 3);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv_line(line);
    if (first) {
      first = false;
      width = cells.size();
      const bool any_numeric = std::any_of(cells.begin(), cells.end(),
                                           [](const std::string& c) { return parse_number(c).has_value(); });
      if (!any_numeric) {
        table.header = std::move(cells);
        continue;
      }
    }
    if (cells.size() != width)
      fail(ErrorKind::InvalidValue, path.string() + ":" + std::to_string(line_no) +
                                        ": ragged row (" + std::to_string(cells.size()) +
                                        " cells, expected " + std::to_string(width) + ")");
    std::vector<double> row;
    row.reserve(width);
    for (const auto& c : cells) {
      auto v = parse_number(c);
      if (!v) fail(ErrorKind::InvalidValue, path.string() + ":" + std::to_string(line_no) +
                                                ": non-numeric cell '" + c + "'");
      if (!std::isfinite(*v))
        fail(ErrorKind::InvalidValue, path.string() + ":" + std::to_string(line_no) +
                                          ": non-finite value '" + c + "'");
      row.push_back(*v);
    }
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) fail(ErrorKind::InvalidValue, path.string() + ": no data rows");
  return table;
}

inline std::vector<Dataset> datasets_from_table(const CsvTable& table, const CsvOptions& opt,
                                                const std::string& name) {
  std::optional<std::size_t> rep_col;
  if (opt.replication_mode == ReplicationMode::rep_column) {
    auto it = std::find(table.header.begin(), table.header.end(), "rep");
    if (it == table.header.end())
      fail(ErrorKind::InvalidValue, name + ": replication mode needs a header column named 'rep'");
    rep_col = static_cast<std::size_t>(it - table.header.begin());
  }
  const std::size_t width = table.rows.front().size();
  const std::size_t n_proc = width - (rep_col ? 1 : 0);
  if (n_proc == 0) fail(ErrorKind::InvalidValue, name + ": no process columns");

  // Groups keep first-appearance order of replication ids.
  std::vector<double> rep_ids;
  std::vector<std::vector<const std::vector<double>*>> groups;
  for (const auto& row : table.rows) {
    const double id = rep_col ? row[*rep_col] : 0.0;
    auto it = std::find(rep_ids.begin(), rep_ids.end(), id);
    std::size_t g = static_cast<std::size_t>(it - rep_ids.begin());
    if (it == rep_ids.end()) {
      rep_ids.push_back(id);
      groups.emplace_back();
    }
    groups[g].push_back(&row);
  }
  std::vector<Dataset> out;
  for (const auto& g : groups) {
    if (g.size() != groups.front().size())
      fail(ErrorKind::InvalidValue, name + ": replications must have equal length");
    std::vector<double> values(n_proc * g.size());
    for (std::size_t t = 0; t < g.size(); ++t) {
      std::size_t p = 0;
      for (std::size_t c = 0; c < width; ++c) {
        if (rep_col && c == *rep_col) continue;
        values[p * g.size() + t] = (*g[t])[c];
        ++p;
      }
    }
    out.emplace_back(n_proc, g.size(), 1, std::move(values), opt.kind, opt.alphabet_size);
  }
  return out;
}

}  // namespace detail

/// Reads one CSV file: one column per process, one row per sample, optional
/// header row. With rep_column, rows are grouped by the "rep" column.
inline Dataset load_csv(const std::filesystem::path& path, const CsvOptions& opt = {}) {
  auto table = detail::read_csv_table(path);
  return Dataset::concat_replications(detail::datasets_from_table(table, opt, path.string()));
}

/// Loads several files; per_file mode stacks them as replications, other
/// modes also concatenate along replications after parsing each file.
inline Dataset load_csv(const std::vector<std::filesystem::path>& paths, const CsvOptions& opt = {}) {
  if (paths.empty()) fail(ErrorKind::InvalidArgument, "no input files");
  std::vector<Dataset> parts;
  for (const auto& p : paths) {
    CsvOptions file_opt = opt;
    if (opt.replication_mode == ReplicationMode::per_file) file_opt.replication_mode = ReplicationMode::single;
    parts.push_back(load_csv(p, file_opt));
  }
  return Dataset::concat_replications(parts);
}

/// Writes a header row p0..pN (plus "rep" when there are several
/// replications) followed by one row per (replication, sample).
inline void write_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  const bool with_rep = d.n_replications() > 1;
  if (with_rep) out << "rep,";
  for (std::size_t p = 0; p < d.n_processes(); ++p) out << (p ? "," : "") << 'p' << p;
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t r = 0; r < d.n_replications(); ++r)
    for (std::size_t t = 0; t < d.n_samples(); ++t) {
      if (with_rep) out << r << ',';
      for (std::size_t p = 0; p < d.n_processes(); ++p) out << (p ? "," : "") << d.at(p, t, r);
      out << '\n';
    }
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

}  // namespace infodyn
