#ifndef DPPCDF_IO_HPP
#define DPPCDF_IO_HPP

#include <array>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dppcdf/cdf.hpp"
#include "dppcdf/kernel.hpp"
#include "dppcdf/samplers.hpp"

// File formats.
//
// Kernel container (little-endian, as written by the host):
//   char[8]  magic "DPPKRNL1"
//   uint64   n
//   uint64   d          0 for dense storage
//   uint32   dtype      0 real64, 1 complex128
//   uint32   kind       0 dense, 1 factor (B^T B), 2 factor (B^H B), 3 SVD
//   uint32   layout     0 row-major
//   uint32   reserved
// followed by the payload: n x n (dense), d x n (factor), or U (n x d),
// sigma (d, always real64), V (n x d) for SVD storage.

namespace dppcdf {

enum class StorageKind : std::uint32_t { dense = 0, factor_transpose = 1, factor_conjugate = 2, svd = 3 };

using StoredKernel = std::variant<DenseKernel, FactoredKernel, SvdFactors>;

inline constexpr std::array<char, 8> kKernelMagic{'D', 'P', 'P', 'K', 'R', 'N', 'L', '1'};

namespace detail {

struct ContainerHeader {
  std::uint64_t n = 0;
  std::uint64_t d = 0;
  std::uint32_t dtype = 0;
  std::uint32_t kind = 0;
  std::uint32_t layout = 0;
  std::uint32_t reserved = 0;
};

template <typename T>
void put(std::ostream &out, const T &value) {
  out.write(reinterpret_cast<const char *>(&value), sizeof value);
}

template <typename T>
T get(std::istream &in, const std::string &path) {
  T value{};
  if (!in.read(reinterpret_cast<char *>(&value), sizeof value)) {
    throw IoError("truncated kernel file " + path);
  }
  return value;
}

inline void put_matrix(std::ostream &out, const ComplexMatrix &m, bool real) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      put(out, m(i, j).real());
      if (!real) {
        put(out, m(i, j).imag());
      }
    }
  }
}

inline ComplexMatrix get_matrix(std::istream &in, Index rows, Index cols, bool real, const std::string &path) {
  ComplexMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      const double re = get<double>(in, path);
      const double im = real ? 0.0 : get<double>(in, path);
      m(i, j) = Complex(re, im);
    }
  }
  return m;
}

inline std::ofstream open_out(const std::string &path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  return out;
}

inline std::ifstream open_in(const std::string &path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  return in;
}

inline void write_header(std::ostream &out, const ContainerHeader &h) {
  out.write(kKernelMagic.data(), kKernelMagic.size());
  put(out, h.n);
  put(out, h.d);
  put(out, h.dtype);
  put(out, h.kind);
  put(out, h.layout);
  put(out, h.reserved);
}

inline void finish(std::ofstream &out, const std::string &path) {
  out.flush();
  if (!out) {
    throw IoError("write to " + path + " failed");
  }
}

/// Shortest decimal that round-trips.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view text, const std::string &where) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
    text.remove_prefix(1);
  }
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw IoError("malformed number '" + std::string(text) + "' in " + where);
  }
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return out;
}

inline bool is_blank_or_comment(std::string_view line) {
  for (const char c : line) {
    if (c == '#') {
      return true;
    }
    if (c != ' ' && c != '\t' && c != '\r') {
      return false;
    }
  }
  return true;
}

} // namespace detail

// --- kernel container ------------------------------------------------------

inline void write_kernel(const std::string &path, const DenseKernel &k) {
  auto out = detail::open_out(path, true);
  const bool real = k.is_real();
  detail::write_header(out, {static_cast<std::uint64_t>(k.n()), 0, real ? 0u : 1u,
                             static_cast<std::uint32_t>(StorageKind::dense), 0, 0});
  detail::put_matrix(out, k.entries(), real);
  detail::finish(out, path);
}

inline void write_kernel(const std::string &path, const FactoredKernel &b) {
  auto out = detail::open_out(path, true);
  const bool real = is_real(b.factor());
  const StorageKind kind = b.conjugate() ? StorageKind::factor_conjugate : StorageKind::factor_transpose;
  detail::write_header(out, {static_cast<std::uint64_t>(b.n()), static_cast<std::uint64_t>(b.d()), real ? 0u : 1u,
                             static_cast<std::uint32_t>(kind), 0, 0});
  detail::put_matrix(out, b.factor(), real);
  detail::finish(out, path);
}

inline void write_kernel(const std::string &path, const SvdFactors &f) {
  auto out = detail::open_out(path, true);
  const bool real = is_real(f.u()) && is_real(f.v());
  detail::write_header(out, {static_cast<std::uint64_t>(f.n()), static_cast<std::uint64_t>(f.d()), real ? 0u : 1u,
                             static_cast<std::uint32_t>(StorageKind::svd), 0, 0});
  detail::put_matrix(out, f.u(), real);
  for (Index j = 0; j < f.d(); ++j) {
    detail::put(out, f.sigma()(j));
  }
  detail::put_matrix(out, f.v(), real);
  detail::finish(out, path);
}

inline StoredKernel read_kernel(const std::string &path) {
  auto in = detail::open_in(path, true);
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kKernelMagic) {
    throw IoError(path + " is not a kernel container (bad magic)");
  }
  detail::ContainerHeader h;
  h.n = detail::get<std::uint64_t>(in, path);
  h.d = detail::get<std::uint64_t>(in, path);
  h.dtype = detail::get<std::uint32_t>(in, path);
  h.kind = detail::get<std::uint32_t>(in, path);
  h.layout = detail::get<std::uint32_t>(in, path);
  h.reserved = detail::get<std::uint32_t>(in, path);
  if (h.dtype > 1 || h.kind > 3 || h.layout != 0) {
    throw IoError(path + ": unsupported dtype/kind/layout in header");
  }
  constexpr std::uint64_t limit = 1u << 20;
  if (h.n == 0 || h.n > limit || h.d > h.n) {
    throw IoError(path + ": implausible dimensions n = " + std::to_string(h.n) + ", d = " + std::to_string(h.d));
  }
  const bool real = h.dtype == 0;
  const auto n = static_cast<Index>(h.n);
  const auto d = static_cast<Index>(h.d);
  try {
    switch (static_cast<StorageKind>(h.kind)) {
    case StorageKind::dense:
      if (d != 0) {
        throw IoError(path + ": dense storage must have d = 0");
      }
      return DenseKernel(detail::get_matrix(in, n, n, real, path));
    case StorageKind::factor_transpose:
    case StorageKind::factor_conjugate:
      if (d == 0) {
        throw IoError(path + ": factored storage needs d > 0");
      }
      return FactoredKernel(detail::get_matrix(in, d, n, real, path),
                            static_cast<StorageKind>(h.kind) == StorageKind::factor_conjugate);
    case StorageKind::svd: {
      if (d == 0) {
        throw IoError(path + ": SVD storage needs d > 0");
      }
      ComplexMatrix u = detail::get_matrix(in, n, d, real, path);
      RealVector sigma(d);
      for (Index j = 0; j < d; ++j) {
        sigma(j) = detail::get<double>(in, path);
      }
      ComplexMatrix v = detail::get_matrix(in, n, d, real, path);
      return SvdFactors(std::move(u), std::move(sigma), std::move(v));
    }
    }
  } catch (const InputError &e) {
    throw IoError(path + ": " + e.what());
  }
  throw IoError(path + ": unknown storage kind");
}

/// Real kernel, one comma-separated row per line.
inline DenseKernel read_kernel_csv(const std::string &path) {
  auto in = detail::open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank_or_comment(line)) {
      continue;
    }
    std::vector<double> row;
    for (const auto field : detail::split(line, ',')) {
      row.push_back(detail::parse_double(field, path + ":" + std::to_string(line_no)));
    }
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Index>(rows.size());
  if (n == 0) {
    throw IoError(path + ": empty kernel");
  }
  RealMatrix k(n, n);
  for (Index i = 0; i < n; ++i) {
    if (static_cast<Index>(rows[static_cast<std::size_t>(i)].size()) != n) {
      throw IoError(path + ": kernel CSV must be square; row " + std::to_string(i + 1) + " has " +
                    std::to_string(rows[static_cast<std::size_t>(i)].size()) + " fields, expected " +
                    std::to_string(n));
    }
    for (Index j = 0; j < n; ++j) {
      k(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  try {
    return DenseKernel(k);
  } catch (const InputError &e) {
    throw IoError(path + ": " + e.what());
  }
}

/// A dense kernel from either the binary container or, for paths ending in
/// .csv, a real CSV matrix. Factored storage is expanded.
inline DenseKernel read_dense_kernel(const std::string &path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) {
    return read_kernel_csv(path);
  }
  const StoredKernel stored = read_kernel(path);
  if (const auto *k = std::get_if<DenseKernel>(&stored)) {
    return *k;
  }
  if (const auto *b = std::get_if<FactoredKernel>(&stored)) {
    return b->to_dense();
  }
  return DenseKernel(std::get<SvdFactors>(stored).reconstruct());
}

inline void write_kernel_csv(const std::string &path, const DenseKernel &k) {
  if (!k.is_real()) {
    throw CapabilityError("CSV export supports real kernels only");
  }
  auto out = detail::open_out(path);
  for (Index i = 0; i < k.n(); ++i) {
    for (Index j = 0; j < k.n(); ++j) {
      out << (j ? "," : "") << detail::format_double(k.entries()(i, j).real());
    }
    out << '\n';
  }
  detail::finish(out, path);
}

/// Per-item values separated by newlines and/or commas; '#' starts a comment line.
inline LinearStatistic read_statistic(const std::string &path) {
  auto in = detail::open_in(path);
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank_or_comment(line)) {
      continue;
    }
    for (const auto field : detail::split(line, ',')) {
      values.push_back(detail::parse_double(field, path + ":" + std::to_string(line_no)));
    }
  }
  if (values.empty()) {
    throw IoError(path + ": no statistic values");
  }
  try {
    return LinearStatistic(values);
  } catch (const InputError &e) {
    throw IoError(path + ": " + e.what());
  }
}

// --- sample batches ------------------------------------------------------------

// One header line, then one subset per line as space-separated 0-based indices
// (an empty line is the empty set).
inline void write_sample_batch(const std::string &path, const SampleBatch &batch) {
  auto out = detail::open_out(path);
  out << "# dppcdf-samples n=" << batch.n << " count=" << batch.subsets.size() << " seed=" << batch.seed
      << " fingerprint=" << std::hex << std::setw(16) << std::setfill('0') << batch.kernel_fingerprint << std::dec
      << '\n';
  for (const Subset &s : batch.subsets) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << (i ? " " : "") << s[i];
    }
    out << '\n';
  }
  detail::finish(out, path);
}

inline SampleBatch read_sample_batch(const std::string &path) {
  auto in = detail::open_in(path);
  std::string header;
  if (!std::getline(in, header) || header.rfind("# dppcdf-samples", 0) != 0) {
    throw IoError(path + ": missing sample-batch header");
  }
  SampleBatch batch;
  std::size_t count = 0;
  bool have_n = false;
  bool have_count = false;
  std::istringstream fields(header.substr(16));
  std::string field;
  while (fields >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) {
      throw IoError(path + ": malformed header field '" + field + "'");
    }
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    try {
      if (key == "n") {
        batch.n = static_cast<Index>(std::stoll(value));
        have_n = true;
      } else if (key == "count") {
        count = static_cast<std::size_t>(std::stoull(value));
        have_count = true;
      } else if (key == "seed") {
        batch.seed = std::stoull(value);
      } else if (key == "fingerprint") {
        batch.kernel_fingerprint = std::stoull(value, nullptr, 16);
      }
    } catch (const std::exception &) {
      throw IoError(path + ": malformed header value '" + field + "'");
    }
  }
  if (!have_n || !have_count || batch.n < 1) {
    throw IoError(path + ": header needs n and count");
  }
  std::string line;
  while (batch.subsets.size() < count && std::getline(in, line)) {
    Subset s;
    std::istringstream items(line);
    std::string token;
    while (items >> token) {
      Index i = 0;
      const auto res = std::from_chars(token.data(), token.data() + token.size(), i);
      if (res.ec != std::errc() || res.ptr != token.data() + token.size() || i < 0 || i >= batch.n) {
        throw IoError(path + ": bad index '" + token + "'");
      }
      s.push_back(i);
    }
    batch.subsets.push_back(std::move(s));
  }
  if (batch.subsets.size() != count) {
    throw IoError(path + ": expected " + std::to_string(count) + " subsets, found " +
                  std::to_string(batch.subsets.size()));
  }
  return batch;
}

// --- curves ----------------------------------------------------------------------

/// Columns t, f (quadrature output) and repaired_f (isotonic projection).
inline void write_cdf_csv(const std::string &path, const CdfEstimate &est) {
  const CdfEstimate repaired = est.repaired ? est : monotone_repair(est);
  auto out = detail::open_out(path);
  out << "t,f,repaired_f\n";
  for (std::size_t i = 0; i < est.t_grid.size(); ++i) {
    out << detail::format_double(est.t_grid[i]) << ',' << detail::format_double(repaired.raw_values[i]) << ','
        << detail::format_double(repaired.f_values[i]) << '\n';
  }
  detail::finish(out, path);
}

/// Columns t, f, lower, upper of the empirical CDF and its DKW band on a grid.
inline void write_ecdf_csv(const std::string &path, const EmpiricalCdf &ecdf, std::span<const double> t_grid) {
  auto out = detail::open_out(path);
  out << "t,f,lower,upper\n";
  for (const double t : t_grid) {
    out << detail::format_double(t) << ',' << detail::format_double(ecdf(t)) << ','
        << detail::format_double(ecdf.lower(t)) << ',' << detail::format_double(ecdf.upper(t)) << '\n';
  }
  detail::finish(out, path);
}

/// A curve read back from any of the CSV outputs. The value column is
/// repaired_f when present, else f; lower/upper are filled for ECDF files.
struct Curve {
  std::vector<double> t;
  std::vector<double> f;
  std::vector<double> lower;
  std::vector<double> upper;

  bool has_band() const { return !lower.empty(); }
};

inline Curve read_curve_csv(const std::string &path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError(path + ": empty file");
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  const auto names = detail::split(line, ',');
  int col_t = -1;
  int col_f = -1;
  int col_rf = -1;
  int col_lo = -1;
  int col_hi = -1;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto name = names[i];
    const int c = static_cast<int>(i);
    if (name == "t") col_t = c;
    else if (name == "f") col_f = c;
    else if (name == "repaired_f") col_rf = c;
    else if (name == "lower") col_lo = c;
    else if (name == "upper") col_hi = c;
  }
  const int col_value = col_rf >= 0 ? col_rf : col_f;
  if (col_t < 0 || col_value < 0 || (col_lo >= 0) != (col_hi >= 0)) {
    throw IoError(path + ": expected columns t and f (or repaired_f), optionally lower and upper");
  }
  Curve curve;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank_or_comment(line)) {
      continue;
    }
    const auto fields = detail::split(line, ',');
    if (fields.size() != names.size()) {
      throw IoError(path + ":" + std::to_string(line_no) + ": wrong number of fields");
    }
    const std::string where = path + ":" + std::to_string(line_no);
    curve.t.push_back(detail::parse_double(fields[static_cast<std::size_t>(col_t)], where));
    curve.f.push_back(detail::parse_double(fields[static_cast<std::size_t>(col_value)], where));
    if (col_lo >= 0) {
      curve.lower.push_back(detail::parse_double(fields[static_cast<std::size_t>(col_lo)], where));
      curve.upper.push_back(detail::parse_double(fields[static_cast<std::size_t>(col_hi)], where));
    }
  }
  if (curve.t.empty()) {
    throw IoError(path + ": no data rows");
  }
  for (std::size_t i = 1; i < curve.t.size(); ++i) {
    if (!(curve.t[i] > curve.t[i - 1])) {
      throw IoError(path + ": t column must be strictly increasing");
    }
  }
  return curve;
}

} // namespace dppcdf

#endif // DPPCDF_IO_HPP
