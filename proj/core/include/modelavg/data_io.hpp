#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "modelavg/dataset.hpp"
#include "modelavg/parallel.hpp"
#include "modelavg/variance.hpp"

namespace modelavg {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(what + " at line " + std::to_string(line)), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Lines of `<label> <idx>:<val> ...`. Blank lines are skipped, `#` starts a
/// comment, CRLF and LF are equivalent, labels may carry a leading '+'.
/// Indices are 1-based and strictly increasing within a row.
SparseDataset parse_libsvm(std::istream& in);
SparseDataset parse_libsvm(std::string_view text);
SparseDataset load_libsvm(const std::filesystem::path& path);
void write_libsvm(std::ostream& out, const SparseDataset& ds);

/// Seeded Fisher-Yates row permutation.
SparseDataset reshuffle(const SparseDataset& ds, std::uint64_t seed);

/// Divides every feature column by its max |value|; returns the factors
/// (1 for empty columns), indexed by 0-based column.
std::vector<double> scale_max_abs(SparseDataset& ds);

/// (raw - f_star) / (f0 - f_star)
double normalize_objective(double raw, double f0, double f_star);

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);
double parse_double(std::string_view text);

/// Written as leading `# key=value` lines; readers skip them.
using Metadata = std::vector<std::pair<std::string, std::string>>;

inline constexpr std::string_view kTraceCsvHeader = "iter,objective,worker_min,worker_max,avg_events,elapsed_ms";
inline constexpr std::string_view kEnvelopeCsvHeader = "dataset,model,sigma2,beta2,dist0_sq,rho";

void write_trace_csv(std::ostream& out, std::span<const TraceRecord> records, const Metadata& meta = {});
std::vector<TraceRecord> read_trace_csv(std::istream& in);

struct EnvelopeRow {
  std::string dataset;
  std::string model;
  double sigma2 = 0.0;
  double beta2 = 0.0;
  double dist0_sq = 0.0;
  double rho = 0.0;

  bool operator==(const EnvelopeRow&) const = default;
};

EnvelopeRow make_envelope_row(std::string dataset, std::string model, const VarianceEnvelope& env);
void write_envelope_csv(std::ostream& out, std::span<const EnvelopeRow> rows, const Metadata& meta = {});
std::vector<EnvelopeRow> read_envelope_csv(std::istream& in);
/// Flat key=value block.
void write_envelope_report(std::ostream& out, const std::string& dataset, const std::string& model,
                           const VarianceEnvelope& env);

}  // namespace modelavg
