#include "modelavg/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace modelavg {

SparseDataset SparseDataset::from_dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& labels) {
  if (a.rows() != labels.size()) throw DimensionMismatch("from_dense: row count vs label count");
  SparseDataset ds;
  ds.n_features = static_cast<std::size_t>(a.cols());
  ds.rows.resize(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    auto& row = ds.rows[static_cast<std::size_t>(i)];
    row.label = labels[i];
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      if (a(i, k) != 0.0) row.features.push_back({static_cast<std::uint32_t>(k + 1), a(i, k)});
    }
  }
  return ds;
}

Eigen::MatrixXd SparseDataset::densify() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                            static_cast<Eigen::Index>(n_features));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& f : rows[i].features) a(static_cast<Eigen::Index>(i), f.index - 1) = f.value;
  }
  return a;
}

Eigen::VectorXd SparseDataset::labels() const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) y[static_cast<Eigen::Index>(i)] = rows[i].label;
  return y;
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

namespace {

bool parse_number(std::string_view text, double& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

void check_sink(const std::ostream& out) {
  if (!out) throw std::runtime_error("output sink failure");
}

void write_metadata(std::ostream& out, const Metadata& meta) {
  for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
}

// Reads the next line that is not a `#` metadata/comment line.
bool next_data_line(std::istream& in, std::string& line, std::size_t& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (!line.empty() && line.front() == '#') continue;
    return true;
  }
  return false;
}

}  // namespace

double parse_double(std::string_view text) {
  double x = 0.0;
  if (!parse_number(text, x)) throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  return x;
}

SparseDataset parse_libsvm(std::istream& in) {
  SparseDataset ds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto tokens = split_whitespace(view);
    if (tokens.empty()) continue;

    SparseRow row;
    if (!parse_number(tokens[0], row.label) || !std::isfinite(row.label)) {
      throw ParseError(lineno, "invalid label '" + std::string(tokens[0]) + "'");
    }
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto tok = tokens[t];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(lineno, "malformed pair '" + std::string(tok) + "' (missing colon)");
      }
      const auto idx_text = tok.substr(0, colon);
      long long idx = 0;
      auto [ptr, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), idx);
      if (idx_text.empty() || ec != std::errc() || ptr != idx_text.data() + idx_text.size()) {
        throw ParseError(lineno, "malformed index in '" + std::string(tok) + "'");
      }
      if (idx < 1) throw ParseError(lineno, "feature index < 1 in '" + std::string(tok) + "'");
      if (idx > static_cast<long long>(UINT32_MAX)) {
        throw ParseError(lineno, "feature index too large in '" + std::string(tok) + "'");
      }
      double value = 0.0;
      if (!parse_number(tok.substr(colon + 1), value) || !std::isfinite(value)) {
        throw ParseError(lineno, "malformed value in '" + std::string(tok) + "'");
      }
      const auto index = static_cast<std::uint32_t>(idx);
      if (!row.features.empty() && index <= row.features.back().index) {
        throw ParseError(lineno, "non-increasing index");
      }
      row.features.push_back({index, value});
    }
    if (!row.features.empty()) {
      ds.n_features = std::max<std::size_t>(ds.n_features, row.features.back().index);
    }
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

SparseDataset parse_libsvm(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_libsvm(in);
}

SparseDataset load_libsvm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path.string() + "'");
  return parse_libsvm(in);
}

void write_libsvm(std::ostream& out, const SparseDataset& ds) {
  for (const auto& row : ds.rows) {
    out << format_double(row.label);
    for (const auto& f : row.features) out << ' ' << f.index << ':' << format_double(f.value);
    out << '\n';
  }
  check_sink(out);
}

SparseDataset reshuffle(const SparseDataset& ds, std::uint64_t seed) {
  SparseDataset out = ds;
  Rng rng(seed, kInitStream, 7);
  for (std::size_t i = out.rows.size(); i > 1; --i) {
    const std::size_t j = rng.index(i);
    std::swap(out.rows[i - 1], out.rows[j]);
  }
  return out;
}

std::vector<double> scale_max_abs(SparseDataset& ds) {
  std::vector<double> factors(ds.n_features, 0.0);
  for (const auto& row : ds.rows)
    for (const auto& f : row.features) factors[f.index - 1] = std::max(factors[f.index - 1], std::abs(f.value));
  for (double& s : factors)
    if (s == 0.0) s = 1.0;
  for (auto& row : ds.rows)
    for (auto& f : row.features) f.value /= factors[f.index - 1];
  return factors;
}

double normalize_objective(double raw, double f0, double f_star) {
  if (!(f0 > f_star)) {
    throw std::invalid_argument("normalize_objective: degenerate run, f0 = " + format_double(f0) +
                                " <= f* = " + format_double(f_star));
  }
  return (raw - f_star) / (f0 - f_star);
}

void write_trace_csv(std::ostream& out, std::span<const TraceRecord> records, const Metadata& meta) {
  write_metadata(out, meta);
  out << kTraceCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.iter << ',' << format_double(r.objective) << ',' << format_double(r.worker_min) << ','
        << format_double(r.worker_max) << ',' << r.avg_events << ',' << format_double(r.elapsed_ms) << '\n';
  }
  check_sink(out);
}

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!next_data_line(in, line, lineno) || line != kTraceCsvHeader) {
    throw ParseError(lineno, "missing trace CSV header");
  }
  std::vector<TraceRecord> out;
  while (next_data_line(in, line, lineno)) {
    if (line.empty()) continue;
    const auto f = split_commas(line);
    if (f.size() != 6) throw ParseError(lineno, "expected 6 trace fields");
    try {
      TraceRecord r;
      r.iter = static_cast<std::uint64_t>(std::stoull(std::string(f[0])));
      r.objective = parse_double(f[1]);
      r.worker_min = parse_double(f[2]);
      r.worker_max = parse_double(f[3]);
      r.avg_events = static_cast<std::uint64_t>(std::stoull(std::string(f[4])));
      r.elapsed_ms = parse_double(f[5]);
      out.push_back(r);
    } catch (const std::logic_error& e) {
      throw ParseError(lineno, std::string("bad trace field: ") + e.what());
    }
  }
  return out;
}

EnvelopeRow make_envelope_row(std::string dataset, std::string model, const VarianceEnvelope& env) {
  return {std::move(dataset), std::move(model), env.sigma2, env.beta2, env.dist0_sq, env.rho};
}

void write_envelope_csv(std::ostream& out, std::span<const EnvelopeRow> rows, const Metadata& meta) {
  write_metadata(out, meta);
  out << kEnvelopeCsvHeader << '\n';
  for (const auto& r : rows) {
    if (r.dataset.find(',') != std::string::npos || r.model.find(',') != std::string::npos) {
      throw std::invalid_argument("envelope CSV names must not contain commas");
    }
    out << r.dataset << ',' << r.model << ',' << format_double(r.sigma2) << ',' << format_double(r.beta2)
        << ',' << format_double(r.dist0_sq) << ',' << format_double(r.rho) << '\n';
  }
  check_sink(out);
}

std::vector<EnvelopeRow> read_envelope_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!next_data_line(in, line, lineno) || line != kEnvelopeCsvHeader) {
    throw ParseError(lineno, "missing envelope CSV header");
  }
  std::vector<EnvelopeRow> out;
  while (next_data_line(in, line, lineno)) {
    if (line.empty()) continue;
    const auto f = split_commas(line);
    if (f.size() != 6) throw ParseError(lineno, "expected 6 envelope fields");
    try {
      out.push_back({std::string(f[0]), std::string(f[1]), parse_double(f[2]), parse_double(f[3]),
                     parse_double(f[4]), parse_double(f[5])});
    } catch (const std::invalid_argument& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return out;
}

void write_envelope_report(std::ostream& out, const std::string& dataset, const std::string& model,
                           const VarianceEnvelope& env) {
  out << "dataset=" << dataset << '\n'
      << "model=" << model << '\n'
      << "sigma2=" << format_double(env.sigma2) << '\n'
      << "beta2=" << format_double(env.beta2) << '\n'
      << "dist0_sq=" << format_double(env.dist0_sq) << '\n'
      << "rho=" << format_double(env.rho) << '\n'
      << "rho_defined=" << (env.rho_defined ? "true" : "false") << '\n'
      << "beta2_clamped=" << (env.beta2_clamped ? "true" : "false") << '\n'
      << "lines=" << env.lines << '\n'
      << "points_per_line=" << env.points_per_line << '\n'
      << "radius=" << format_double(env.radius) << '\n';
  check_sink(out);
}

}  // namespace modelavg
