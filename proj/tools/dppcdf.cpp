// dppcdf: command-line front end for kernel generation, CDF estimation,
// baseline sampling, empirical CDFs and curve comparison.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dppcdf/dppcdf.hpp"
#include "dppcdf/report.hpp"

using namespace dppcdf;
using Json = nlohmann::ordered_json;

namespace {

// exit codes per error category; 1 is reserved for anything unexpected
int exit_code(ErrorCategory c) {
  switch (c) {
  case ErrorCategory::input: return 2;
  case ErrorCategory::io: return 3;
  case ErrorCategory::capability: return 4;
  case ErrorCategory::invalid_kernel: return 5;
  case ErrorCategory::conditioning: return 6;
  case ErrorCategory::evaluation: return 7;
  }
  return 1;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::vector<std::string> split(const std::string &text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) {
    parts.push_back(part);
  }
  if (!text.empty() && text.back() == sep) {
    parts.emplace_back();
  }
  return parts;
}

double to_double(const std::string &s, const std::string &what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) {
      throw std::invalid_argument(s);
    }
    return v;
  } catch (const std::exception &) {
    throw InputError("bad number '" + s + "' in " + what);
  }
}

long long to_int(const std::string &s, const std::string &what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) {
      throw std::invalid_argument(s);
    }
    return v;
  } catch (const std::exception &) {
    throw InputError("bad integer '" + s + "' in " + what);
  }
}

/// t_min:t_max:T, T equally spaced points including both ends.
std::vector<double> parse_grid(const std::string &spec) {
  const auto parts = split(spec, ':');
  if (parts.size() != 3) {
    throw InputError("grid must be t_min:t_max:T, got '" + spec + "'");
  }
  const double lo = to_double(parts[0], "--grid");
  const double hi = to_double(parts[1], "--grid");
  const long long points = to_int(parts[2], "--grid");
  if (points < 1) {
    throw InputError("grid needs T >= 1");
  }
  if (!(lo > 0.0) || !(hi >= lo) || (points > 1 && !(hi > lo))) {
    throw InputError("grid needs 0 < t_min < t_max (or t_min = t_max with T = 1)");
  }
  std::vector<double> grid;
  for (long long i = 0; i < points; ++i) {
    grid.push_back(points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  return grid;
}

struct KernelSource {
  std::string path;
  std::string synthetic; // n:rank:seed

  void add_to(CLI::App *app) {
    app->add_option("--kernel", path, "kernel file (binary container, or .csv for a real dense matrix)");
    app->add_option("--synthetic", synthetic, "synthetic kernel n:rank:seed (eigenvalues 1/sqrt(i), Haar frame)");
  }

  DenseKernel load() const {
    if (path.empty() == synthetic.empty()) {
      throw InputError("give exactly one of --kernel and --synthetic");
    }
    if (!path.empty()) {
      return read_dense_kernel(path);
    }
    const auto parts = split(synthetic, ':');
    if (parts.size() != 3) {
      throw InputError("--synthetic must be n:rank:seed");
    }
    return gen_synthetic_kernel(static_cast<Index>(to_int(parts[0], "--synthetic")),
                                static_cast<Index>(to_int(parts[1], "--synthetic")),
                                static_cast<std::uint64_t>(to_int(parts[2], "--synthetic")));
  }

  Json describe() const {
    if (!path.empty()) {
      return {{"file", path}};
    }
    return {{"synthetic", synthetic}};
  }
};

/// abs-cos | inverse-index | constant[:v] | indicator:i,j,... (0-based) | file:PATH
LinearStatistic parse_statistic(const std::string &spec, Index n) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (name == "abs-cos" && arg.empty()) {
    return abs_cos_statistic(n);
  }
  if (name == "inverse-index" && arg.empty()) {
    return inverse_index_statistic(n);
  }
  if (name == "constant") {
    return constant_statistic(n, arg.empty() ? 1.0 : to_double(arg, "--statistic"));
  }
  if (name == "indicator") {
    std::vector<Index> items;
    for (const auto &s : split(arg, ',')) {
      items.push_back(static_cast<Index>(to_int(s, "--statistic")));
    }
    return indicator_statistic(n, items);
  }
  if (name == "file") {
    LinearStatistic psi = read_statistic(arg);
    check_dimensions(n, psi);
    return psi;
  }
  throw InputError("unknown statistic '" + spec + "' (abs-cos, inverse-index, constant[:v], indicator:i,j,..., file:PATH)");
}

void write_json(const std::string &path, const Json &j) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  out << j.dump(2) << '\n';
  if (!out) {
    throw IoError("write to " + path + " failed");
  }
}

std::size_t resolve_threads(int requested) {
  return requested > 0 ? static_cast<std::size_t>(requested) : default_thread_count();
}

// --- gen-kernel ---------------------------------------------------------------

struct GenKernelArgs {
  Index n = 0;
  Index rank = 0;
  std::uint64_t seed = 0;
  std::string out;
};

void run_gen_kernel(const GenKernelArgs &a) {
  const DenseKernel k = gen_synthetic_kernel(a.n, a.rank, a.seed);
  if (a.out.size() >= 4 && a.out.compare(a.out.size() - 4, 4, ".csv") == 0) {
    write_kernel_csv(a.out, k);
  } else {
    write_kernel(a.out, k);
  }
  std::cout << "wrote " << a.out << " (n = " << a.n << ", rank = " << a.rank << ", trace = "
            << k.entries().trace().real() << ")\n";
}

// --- cdf ------------------------------------------------------------------------

struct CdfArgs {
  KernelSource kernel;
  bool ensemble = false;
  std::string statistic = "abs-cos";
  std::string method = "dense";
  Index rank = 0;
  std::string grid;
  int e_nodes = kDefaultNodes;
  std::optional<double> sigma;
  bool per_t_sigma = false;
  std::uint64_t seed = 0;
  std::optional<double> ridge;
  Index oversampling = 10;
  int power_iters = 2;
  int threads = 0;
  std::string out;
  std::string meta;
};

void run_cdf(const CdfArgs &a) {
  const auto load_start = Clock::now();
  const DenseKernel loaded = a.kernel.load();
  const double load_s = seconds_since(load_start);
  const LinearStatistic psi = parse_statistic(a.statistic, loaded.n());
  const std::vector<double> grid = parse_grid(a.grid);

  CdfOptions opts;
  opts.e_nodes = a.e_nodes;
  opts.sigma = a.sigma;
  opts.shared_sigma = !a.per_t_sigma;
  opts.threads = resolve_threads(a.threads);

  const bool low_rank = a.method == "nystrom" || a.method == "svd" || a.method == "per-node";
  if (low_rank && a.rank < 1) {
    throw InputError("method " + a.method + " needs --rank D >= 1");
  }
  if (a.ensemble && a.method != "brute") {
    throw CapabilityError("--ensemble (kernel file holds L) is only supported by --method brute");
  }
  Json extra;
  CdfEstimate est;
  if (a.method == "dense") {
    est = approx_cdf(loaded, psi, grid, opts);
  } else if (a.method == "nystrom") {
    const auto start = Clock::now();
    const NystromResult nys = nystrom_with_landmarks(loaded, {a.rank, a.ridge, a.seed});
    const double fact_s = seconds_since(start);
    est = approx_cdf(nys.factor, psi, grid, opts);
    est.timings.factorization_s = fact_s;
    extra["ridge"] = nys.ridge;
    extra["landmarks"] = nys.landmarks;
  } else if (a.method == "svd" || a.method == "per-node") {
    RandomizedSvdConfig cfg{a.rank, a.oversampling, a.power_iters, a.seed};
    if (cfg.d + cfg.oversampling > loaded.n()) {
      cfg.oversampling = std::max<Index>(0, loaded.n() - cfg.d);
    }
    extra["oversampling"] = cfg.oversampling;
    extra["power_iters"] = cfg.power_iters;
    if (a.method == "svd") {
      const auto start = Clock::now();
      const SvdFactors f = randomized_svd(loaded, cfg);
      const double fact_s = seconds_since(start);
      est = approx_cdf(f, psi, grid, opts);
      est.timings.factorization_s = fact_s;
    } else {
      est = approx_cdf_with_diagonal(loaded, psi, grid, a.rank, opts, cfg);
    }
  } else if (a.method == "brute") {
    if (loaded.n() > 15) {
      throw CapabilityError("brute-force enumeration supports n <= 15, got " + std::to_string(loaded.n()));
    }
    const auto start = Clock::now();
    const AtomTable atoms = a.ensemble ? brute_force_atoms(loaded) : atoms_from_marginal_kernel(loaded);
    const ExactCdf exact = statistic_cdf_from_atoms(atoms, psi);
    est.t_grid = grid;
    for (const double t : grid) {
      est.f_values.push_back(exact(t));
    }
    est.method = CdfMethod::exact;
    est.rank = loaded.n();
    est.timings.factorization_s = seconds_since(start);
    extra["jumps"] = exact.jumps.size();
    extra["total_mass"] = exact.total_mass();
  } else {
    throw InputError("unknown method '" + a.method + "' (dense, nystrom, svd, per-node, brute)");
  }

  write_cdf_csv(a.out, est);
  if (!a.meta.empty()) {
    Json j = to_json(est);
    if (a.method == "brute") {
      j.erase("e_nodes");
      j.erase("sigma");
      j.erase("period_scale");
      j.erase("shared_sigma");
    }
    j["kernel"] = a.kernel.describe();
    j["kernel"]["n"] = loaded.n();
    j["kernel"]["load_s"] = load_s;
    j["kernel"]["ensemble"] = a.ensemble ? "L" : "K";
    j["statistic"] = a.statistic;
    j["seed"] = a.seed;
    j["threads"] = opts.threads;
    if (!extra.is_null()) {
      j["details"] = extra;
    }
    j["created_utc"] = utc_timestamp();
    write_json(a.meta, j);
  }
  std::cerr << "cdf: " << a.method << ", " << grid.size() << " points, " << est.transform_evaluations
            << " transform evaluations -> " << a.out << '\n';
}

// --- sample ---------------------------------------------------------------------

struct SampleArgs {
  KernelSource kernel;
  bool ensemble = false;
  std::string method = "hkpv";
  std::size_t count = 1000;
  std::uint64_t seed = 0;
  std::string out;
  std::string meta;
};

void run_sample(const SampleArgs &a) {
  const DenseKernel k = a.kernel.load();
  const auto start = Clock::now();
  SampleBatch batch;
  Json extra;
  if (a.method == "hkpv") {
    if (a.ensemble) {
      throw CapabilityError("hkpv samples from a marginal kernel K; convert L first or use --method brute");
    }
    const HkpvSampler sampler(k);
    std::mt19937_64 rng(a.seed);
    batch = SampleBatch{k.n(), {}, kernel_fingerprint(k), a.seed};
    batch.subsets.reserve(a.count);
    for (std::size_t i = 0; i < a.count; ++i) {
      batch.subsets.push_back(sampler.sample(rng));
    }
    extra["clamped_diagonal_warnings"] = sampler.warnings();
  } else if (a.method == "brute") {
    if (k.n() > 15) {
      throw CapabilityError("brute-force sampling supports n <= 15, got " + std::to_string(k.n()));
    }
    const AtomSampler sampler(a.ensemble ? brute_force_atoms(k) : atoms_from_marginal_kernel(k));
    std::mt19937_64 rng(a.seed);
    batch = SampleBatch{k.n(), {}, kernel_fingerprint(k), a.seed};
    for (std::size_t i = 0; i < a.count; ++i) {
      batch.subsets.push_back(sampler.sample(rng));
    }
  } else {
    throw InputError("unknown sampler '" + a.method + "' (hkpv, brute)");
  }
  const double sampling_s = seconds_since(start);
  write_sample_batch(a.out, batch);
  if (!a.meta.empty()) {
    std::ostringstream fp;
    fp << std::hex << std::setw(16) << std::setfill('0') << batch.kernel_fingerprint;
    Json j{{"method", a.method}, {"count", a.count}, {"seed", a.seed}, {"kernel", a.kernel.describe()},
           {"fingerprint", fp.str()}, {"timings_s", {{"sampling", sampling_s}}}};
    if (!extra.is_null()) {
      j["details"] = extra;
    }
    j["created_utc"] = utc_timestamp();
    write_json(a.meta, j);
  }
  std::cerr << "sample: " << a.count << " draws (" << a.method << ") -> " << a.out << '\n';
}

// --- ecdf -----------------------------------------------------------------------

struct EcdfArgs {
  std::string samples;
  std::string statistic = "abs-cos";
  std::string grid;
  double delta = 0.05;
  std::string out;
  std::string meta;
};

void run_ecdf(const EcdfArgs &a) {
  const SampleBatch batch = read_sample_batch(a.samples);
  const LinearStatistic psi = parse_statistic(a.statistic, batch.n);
  const std::vector<double> grid = parse_grid(a.grid);
  const EmpiricalCdf e = empirical_cdf(batch, psi, a.delta);
  write_ecdf_csv(a.out, e, grid);
  if (!a.meta.empty()) {
    Json j{{"method", "empirical"}, {"samples", a.samples}, {"statistic", a.statistic}, {"m", e.m},
           {"delta", e.delta},       {"half_width", e.half_width()},
           {"grid", {{"t_min", grid.front()}, {"t_max", grid.back()}, {"points", grid.size()}}}};
    j["created_utc"] = utc_timestamp();
    write_json(a.meta, j);
  }
  std::cerr << "ecdf: m = " << e.m << ", DKW half-width " << e.half_width() << " at delta = " << e.delta << " -> "
            << a.out << '\n';
}

// --- compare --------------------------------------------------------------------

struct CompareArgs {
  std::string baseline;
  std::vector<std::string> curves;
  std::optional<double> max_sup;
  std::optional<double> min_containment;
  std::string json;
  std::string diff_csv;
  bool strict = false;
};

int run_compare(const CompareArgs &a) {
  const Curve base = read_curve_csv(a.baseline);
  Json rows = Json::array();
  bool all_pass = true;
  std::ofstream diff;
  if (!a.diff_csv.empty()) {
    diff.open(a.diff_csv);
    if (!diff) {
      throw IoError("cannot open " + a.diff_csv + " for writing");
    }
    diff << "file,t,difference\n";
  }
  std::cout << std::left << std::setw(40) << "curve" << std::setw(8) << "points" << std::setw(14) << "sup_dist"
            << std::setw(13) << "containment" << "verdict\n";
  for (const std::string &path : a.curves) {
    const ComparisonReport r = compare_curves(read_curve_csv(path), base);
    bool pass = true;
    if (a.max_sup && r.sup_distance > *a.max_sup) {
      pass = false;
    }
    if (a.min_containment) {
      if (!r.containment) {
        throw InputError("--min-containment needs a baseline with a band (an ecdf output)");
      }
      pass = pass && *r.containment >= *a.min_containment;
    }
    const bool judged = a.max_sup || a.min_containment;
    all_pass = all_pass && pass;
    std::ostringstream sup;
    sup << std::setprecision(6) << r.sup_distance;
    std::ostringstream cont;
    if (r.containment) {
      cont << std::setprecision(4) << *r.containment;
    } else {
      cont << "-";
    }
    std::cout << std::left << std::setw(40) << path << std::setw(8) << r.t.size() << std::setw(14) << sup.str()
              << std::setw(13) << cont.str() << (judged ? (pass ? "PASS" : "FAIL") : "-") << '\n';
    Json row{{"curve", path}, {"points", r.t.size()}, {"sup_distance", r.sup_distance}};
    row["containment"] = r.containment ? Json(*r.containment) : Json(nullptr);
    row["verdict"] = judged ? Json(pass ? "pass" : "fail") : Json(nullptr);
    rows.push_back(row);
    if (diff.is_open()) {
      for (std::size_t i = 0; i < r.t.size(); ++i) {
        diff << path << ',' << detail::format_double(r.t[i]) << ',' << detail::format_double(r.difference[i]) << '\n';
      }
    }
  }
  if (!a.json.empty()) {
    Json j{{"baseline", a.baseline}, {"baseline_has_band", base.has_band()}};
    j["thresholds"] = {{"max_sup", a.max_sup ? Json(*a.max_sup) : Json(nullptr)},
                       {"min_containment", a.min_containment ? Json(*a.min_containment) : Json(nullptr)}};
    j["results"] = rows;
    write_json(a.json, j);
  }
  return a.strict && !all_pass ? 1 : 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"CDFs of linear statistics of determinantal point processes"};
  app.require_subcommand(1);

  GenKernelArgs gen;
  auto *gen_cmd = app.add_subcommand("gen-kernel", "write a synthetic kernel with eigenvalues 1/sqrt(i)");
  gen_cmd->add_option("--n", gen.n, "ground set size")->required();
  gen_cmd->add_option("--rank", gen.rank, "number of nonzero eigenvalues")->required();
  gen_cmd->add_option("--seed", gen.seed, "RNG seed");
  gen_cmd->add_option("--out", gen.out, "output path (.csv for text, anything else for the binary container)")
      ->required();

  CdfArgs cdf;
  auto *cdf_cmd = app.add_subcommand("cdf", "estimate the CDF of a linear statistic on a grid");
  cdf.kernel.add_to(cdf_cmd);
  cdf_cmd->add_flag("--ensemble", cdf.ensemble, "the kernel file holds L rather than K (brute only)");
  cdf_cmd->add_option("--statistic", cdf.statistic, "abs-cos | inverse-index | constant[:v] | indicator:i,j | file:PATH")
      ->capture_default_str();
  cdf_cmd->add_option("--method", cdf.method, "dense | nystrom | svd | per-node | brute")->capture_default_str();
  cdf_cmd->add_option("--rank", cdf.rank, "rank D of the low-rank methods");
  cdf_cmd->add_option("--grid", cdf.grid, "t_min:t_max:T")->required();
  cdf_cmd->add_option("--e-nodes", cdf.e_nodes, "number of quadrature nodes (odd)")->capture_default_str();
  cdf_cmd->add_option("--sigma", cdf.sigma, "abscissa of the inversion contour (default from the grid)");
  cdf_cmd->add_flag("--per-t-sigma", cdf.per_t_sigma, "use a separate plan and sigma for every grid point");
  cdf_cmd->add_option("--seed", cdf.seed, "seed for landmark sampling / sketches");
  cdf_cmd->add_option("--ridge", cdf.ridge, "Nystrom ridge (default Tr(K)/D)");
  cdf_cmd->add_option("--oversampling", cdf.oversampling, "randomized SVD oversampling")->capture_default_str();
  cdf_cmd->add_option("--power-iters", cdf.power_iters, "randomized SVD power iterations")->capture_default_str();
  cdf_cmd->add_option("--threads", cdf.threads, "worker threads (default DPPCDF_THREADS or all cores)");
  cdf_cmd->add_option("--out", cdf.out, "CSV output (t,f,repaired_f)")->required();
  cdf_cmd->add_option("--meta", cdf.meta, "JSON metadata output");

  SampleArgs sample;
  auto *sample_cmd = app.add_subcommand("sample", "draw a batch of DPP samples");
  sample.kernel.add_to(sample_cmd);
  sample_cmd->add_flag("--ensemble", sample.ensemble, "the kernel file holds L rather than K (brute only)");
  sample_cmd->add_option("--method", sample.method, "hkpv | brute")->capture_default_str();
  sample_cmd->add_option("--count", sample.count, "number of samples M")->capture_default_str();
  sample_cmd->add_option("--seed", sample.seed, "RNG seed");
  sample_cmd->add_option("--out", sample.out, "sample batch output")->required();
  sample_cmd->add_option("--meta", sample.meta, "JSON metadata output");

  EcdfArgs ecdf;
  auto *ecdf_cmd = app.add_subcommand("ecdf", "empirical CDF and DKW band of a sample batch");
  ecdf_cmd->add_option("--samples", ecdf.samples, "sample batch file")->required();
  ecdf_cmd->add_option("--statistic", ecdf.statistic, "statistic (as for cdf)")->capture_default_str();
  ecdf_cmd->add_option("--grid", ecdf.grid, "t_min:t_max:T")->required();
  ecdf_cmd->add_option("--delta", ecdf.delta, "band confidence parameter")->capture_default_str();
  ecdf_cmd->add_option("--out", ecdf.out, "CSV output (t,f,lower,upper)")->required();
  ecdf_cmd->add_option("--meta", ecdf.meta, "JSON metadata output");

  CompareArgs cmp;
  auto *cmp_cmd = app.add_subcommand("compare", "compare CDF curves against a baseline");
  cmp_cmd->add_option("--baseline", cmp.baseline, "baseline curve (an ecdf output gives band containment)")
      ->required();
  cmp_cmd->add_option("curves", cmp.curves, "curves to compare")->required();
  cmp_cmd->add_option("--max-sup", cmp.max_sup, "verdict: sup distance must not exceed this");
  cmp_cmd->add_option("--min-containment", cmp.min_containment, "verdict: band containment must reach this");
  cmp_cmd->add_option("--json", cmp.json, "machine-readable report");
  cmp_cmd->add_option("--diff-csv", cmp.diff_csv, "pointwise differences");
  cmp_cmd->add_flag("--strict", cmp.strict, "exit with status 1 when a verdict fails");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  }

  try {
    if (*gen_cmd) {
      run_gen_kernel(gen);
    } else if (*cdf_cmd) {
      run_cdf(cdf);
    } else if (*sample_cmd) {
      run_sample(sample);
    } else if (*ecdf_cmd) {
      run_ecdf(ecdf);
    } else if (*cmp_cmd) {
      return run_compare(cmp);
    }
  } catch (const Error &e) {
    std::cerr << "error[" << to_string(e.category()) << "]: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const std::bad_alloc &) {
    std::cerr << "error[resource]: out of memory\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error[internal]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
