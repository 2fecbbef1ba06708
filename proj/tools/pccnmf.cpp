// pccnmf command line front end.
//
// Exit codes: 0 success, 1 computational failure (JSON error on stderr),
// 2 usage error.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pccnmf/clustering.hpp"
#include "pccnmf/dataset.hpp"
#include "pccnmf/denoising.hpp"
#include "pccnmf/error.hpp"
#include "pccnmf/nmf.hpp"
#include "pccnmf/pcc_analysis.hpp"
#include "pccnmf/prob_model.hpp"
#include "pccnmf/rank_scan.hpp"
#include "pccnmf/report.hpp"
#include "pccnmf/stability.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace pccnmf;

namespace {

std::uint64_t default_seed() {
  if (const char* s = std::getenv("PCCNMF_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw ParameterError(std::string("PCCNMF_SEED is not an integer: ") + s);
    }
  }
  return 0;
}

DataMatrix load_input(const std::string& path) {
  const fs::path p(path);
  return load_matrix(p, fs::is_directory(p) ? MatrixFormat::pgm_dir : MatrixFormat::csv);
}

std::vector<std::uint64_t> seed_range(std::uint64_t base, int count) {
  if (count < 1) throw ParameterError("--seeds must be >= 1");
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(count));
  std::iota(seeds.begin(), seeds.end(), base);
  return seeds;
}

void emit(const RunReport& report, const std::string& out) {
  const json j = report.to_json();
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json(out, j);
  }
}

RunReport make_report(const std::string& command) {
  RunReport r;
  r.command = command;
  r.timestamp = utc_timestamp();
  return r;
}

void add_digest(RunReport& r, const std::string& name, const Matrix& m) {
  r.input_digests[name] = digest_hex(content_digest(m));
}

struct Globals {
  int threads = 1;
};

// ---------------------------------------------------------------------------

struct SwimmerGenArgs {
  std::string out;
};

void run_swimmer_gen(const SwimmerGenArgs& a) {
  const DataMatrix s = generate_swimmer().with_provenance({"swimmer", {}, {}});
  save_matrix(a.out, s);
  RunReport r = make_report("swimmer-gen");
  r.outputs["matrix"] = a.out;
  r.outputs["sidecar"] = sidecar_path(a.out).string();
  r.outputs["rows"] = s.rows();
  r.outputs["cols"] = s.cols();
  r.outputs["digest"] = digest_hex(content_digest(s.values()));
  emit(r, "");
}

struct PerturbArgs {
  std::string in;
  std::string out;
  std::optional<double> xi;
  std::optional<std::uint64_t> seed;
  bool binarize = false;
  bool rescale = false;
};

void run_perturb(const PerturbArgs& a) {
  DataMatrix m = load_input(a.in);
  RunReport r = make_report("perturb");
  add_digest(r, "input", m.values());
  if (!a.xi && !a.binarize && !a.rescale) {
    throw ParameterError("perturb needs --xi, --binarize or --rescale");
  }
  if (a.rescale) m = rescale(m);
  if (a.binarize) m = binarize(m);
  Provenance prov = m.provenance();
  if (a.xi) {
    const std::uint64_t seed = a.seed.value_or(default_seed());
    m = apply_flip_noise(m, *a.xi, seed);
    prov.seed = seed;
    prov.xi = *a.xi;
    r.seeds.push_back(seed);
    r.parameters["xi"] = *a.xi;
  }
  prov.source = a.in;
  m = m.with_provenance(prov);
  save_matrix(a.out, m);
  r.parameters["binarize"] = a.binarize;
  r.parameters["rescale"] = a.rescale;
  r.outputs["matrix"] = a.out;
  r.outputs["digest"] = digest_hex(content_digest(m.values()));
  emit(r, "");
}

struct SolverArgs {
  std::string loss = "frobenius";
  int max_iters = 2000;
  double tol = 1e-6;

  SolverOptions options() const {
    SolverOptions o;
    o.max_iters = max_iters;
    o.rel_tol = tol;
    return o;
  }
  void add_to(CLI::App* app) {
    app->add_option("--loss", loss, "frobenius or kl")
        ->check(CLI::IsMember({"frobenius", "kl"}));
    app->add_option("--max-iters", max_iters, "iteration cap")->check(CLI::PositiveNumber);
    app->add_option("--tol", tol, "relative loss change that stops the solver")
        ->check(CLI::PositiveNumber);
  }
  json to_json() const {
    return {{"loss", loss}, {"max_iters", max_iters}, {"tol", tol}};
  }
};

struct FactorizeArgs {
  std::string in;
  std::string out_dir;
  std::string report;
  int rank = 0;
  std::optional<std::uint64_t> seed;
  SolverArgs solver;
};

void run_factorize(const FactorizeArgs& a) {
  const DataMatrix m = load_input(a.in);
  const std::uint64_t seed = a.seed.value_or(default_seed());
  const Factorization f =
      factorize(m, a.rank, parse_loss(a.solver.loss), seed, a.solver.options());
  save_factorization(a.out_dir, f);
  std::ostringstream trace;
  trace.precision(17);
  trace << "iteration,loss\n";
  for (const auto& t : f.trace) trace << t.iteration << ',' << t.loss << '\n';
  write_text(fs::path(a.out_dir) / "trace.csv", trace.str());

  RunReport r = make_report("factorize");
  add_digest(r, "input", m.values());
  r.seeds.push_back(seed);
  r.parameters = a.solver.to_json();
  r.parameters["rank"] = a.rank;
  const Matrix recon = f.reconstruct();
  r.outputs["dir"] = a.out_dir;
  r.outputs["iterations"] = f.iterations();
  r.outputs["converged"] = f.converged;
  r.outputs["final_loss"] = f.final_loss();
  r.outputs["frobenius_error"] = frobenius_error(m.values(), recon);
  r.outputs["relative_error"] = relative_error(m.values(), recon);
  r.outputs["kl_divergence"] = kl_divergence(m.values(), recon);
  const MarginalResiduals res = marginal_residuals(m.values(), recon);
  r.outputs["marginal_residuals"] = {{"row", res.row}, {"col", res.col}};
  emit(r, a.report);
}

struct RankScanArgs {
  std::string in;
  std::string out;
  std::string csv;
  int r_min = 1;
  int r_max = 1;
  double tau = 0.0;
  int seeds = 10;
  std::optional<std::uint64_t> seed;
  bool dual = false;
  SolverArgs solver;
};

void run_rank_scan(const RankScanArgs& a, const Globals& g) {
  const DataMatrix m = load_input(a.in);
  RankScanOptions opts;
  opts.r_min = a.r_min;
  opts.r_max = a.r_max;
  opts.tau = a.tau;
  opts.seeds = seed_range(a.seed.value_or(default_seed()), a.seeds);
  opts.loss = parse_loss(a.solver.loss);
  opts.solver = a.solver.options();
  opts.threads = g.threads;
  const RankScanReport rep = a.dual ? estimate_rc_dual(m, opts) : estimate_rc(m, opts);

  RunReport r = make_report("rank-scan");
  add_digest(r, "input", m.values());
  r.seeds = opts.seeds;
  r.parameters = a.solver.to_json();
  r.parameters["r_min"] = a.r_min;
  r.parameters["r_max"] = a.r_max;
  r.parameters["tau"] = a.tau;
  r.parameters["dual"] = a.dual;
  r.outputs = rep.to_json();
  json minima;
  for (BicVariant v : {BicVariant::bic1, BicVariant::bic2, BicVariant::bic3}) {
    minima.push_back(bic_local_minima(rep, v));
  }
  r.outputs["bic_local_minima"] = minima;
  if (!a.csv.empty()) write_text(a.csv, rep.to_csv());
  emit(r, a.out);
}

struct StabilityArgs {
  std::string in;
  std::string out;
  std::string hist_csv;
  std::string mode = "seed-pair";
  int rank = 0;
  double xi = 0.0;
  std::optional<std::uint64_t> seed_a;
  std::uint64_t seed_b = 1;
  SolverArgs solver;
};

void run_stability(const StabilityArgs& a) {
  const DataMatrix m = load_input(a.in);
  StabilityOptions opts;
  opts.rank = a.rank;
  opts.mode = a.mode == "noise-split" ? StabilityMode::noise_split : StabilityMode::seed_pair;
  opts.xi = a.xi;
  opts.seed_a = a.seed_a.value_or(default_seed());
  opts.seed_b = a.seed_b;
  opts.loss = parse_loss(a.solver.loss);
  opts.solver = a.solver.options();
  const StabilityResult res = stability_experiment(m, opts);

  RunReport r = make_report("stability");
  add_digest(r, "input", m.values());
  r.seeds = {opts.seed_a, opts.seed_b};
  r.parameters = a.solver.to_json();
  r.outputs = res.report;
  if (!a.hist_csv.empty()) {
    write_text(a.hist_csv, histogram_csv(distance_histogram(res.matching.distances)));
  }
  emit(r, a.out);
}

struct ModelArgs {
  std::string in;
  std::string factors;
  std::string out;
};

void run_analyze(const ModelArgs& a) {
  const DataMatrix m = load_input(a.in);
  const Factorization f = load_factorization(a.factors);
  const PccModel pcc = derive_pcc(m, f);
  RunReport r = make_report("analyze");
  add_digest(r, "input", m.values());
  add_digest(r, "basis", f.basis);
  add_digest(r, "weights", f.weights);
  r.seeds.push_back(f.seed);
  r.parameters["rank"] = f.rank();
  r.parameters["loss"] = to_string(f.loss);
  r.outputs = analysis_json(pcc);
  r.outputs["predictability"] = {
      {"primal", predictability_fraction(pcc, Direction::primal)},
      {"dual", predictability_fraction(pcc, Direction::dual)}};
  if (f.rank() >= 2) r.outputs["dbar"] = mean_internal_distance(f.basis);
  emit(r, a.out);
}

struct ClusterArgs {
  ModelArgs model;
  int k = 5;
  bool require_positive = true;
  std::string montage;
};

void run_cluster(const ClusterArgs& a) {
  const DataMatrix m = load_input(a.model.in);
  const Factorization f = load_factorization(a.model.factors);
  const ClusterReport rep = natural_clusters(derive_pcc(m, f), a.k, a.require_positive);
  if (!a.montage.empty()) export_cluster_montage(rep, m, f, a.montage);
  RunReport r = make_report("cluster");
  add_digest(r, "input", m.values());
  add_digest(r, "basis", f.basis);
  r.seeds.push_back(f.seed);
  r.parameters["k"] = a.k;
  r.parameters["require_positive"] = a.require_positive;
  r.outputs = rep.to_json();
  emit(r, a.model.out);
}

struct DenoiseArgs {
  std::string in;
  std::string noisy;
  std::string out;
  std::string csv;
  std::optional<double> xi;
  std::optional<std::uint64_t> noise_seed;
  int r_lo = 1;
  int r_hi = 1;
  int step = 1;
  int exclusions = 2;
  int seeds = 1;
  std::optional<std::uint64_t> seed;
  std::string baseline = "svd";
  SolverArgs solver;
};

void run_denoise(const DenoiseArgs& a, const Globals& g) {
  const DataMatrix clean = load_input(a.in);
  RunReport r = make_report("denoise");
  add_digest(r, "clean", clean.values());
  std::optional<DataMatrix> noisy;
  if (!a.noisy.empty()) {
    noisy = load_input(a.noisy);
  } else if (a.xi) {
    const std::uint64_t ns = a.noise_seed.value_or(default_seed());
    noisy = apply_flip_noise(clean, *a.xi, ns);
    r.parameters["xi"] = *a.xi;
    r.parameters["noise_seed"] = ns;
  } else {
    throw ParameterError("denoise needs --noisy or --xi");
  }
  add_digest(r, "noisy", noisy->values());
  if (a.r_lo < 1 || a.r_hi < a.r_lo) throw ParameterError("invalid rank range");
  DenoiseOptions opts;
  for (int k = a.r_lo; k <= a.r_hi; k += a.step) opts.ranks.push_back(k);
  opts.exclusions = a.exclusions;
  opts.seeds = seed_range(a.seed.value_or(default_seed()), a.seeds);
  opts.loss = parse_loss(a.solver.loss);
  opts.solver = a.solver.options();
  opts.svd_baseline = a.baseline == "svd";
  opts.threads = g.threads;
  const DenoiseReport rep = denoise_sweep(clean, *noisy, opts);

  r.seeds = opts.seeds;
  const json solver = a.solver.to_json();
  for (auto& [k, v] : solver.items()) r.parameters[k] = v;
  r.parameters["r_lo"] = a.r_lo;
  r.parameters["r_hi"] = a.r_hi;
  r.parameters["step"] = a.step;
  r.parameters["baseline"] = a.baseline;
  r.outputs = rep.to_json();
  r.outputs["random_baseline"] = 1.0 / static_cast<double>(clean.cols());
  if (!a.csv.empty()) write_text(a.csv, rep.to_csv());
  emit(r, a.out);
}

struct BundleArgs {
  std::vector<std::string> inputs;
  std::string out;
};

void run_report(const BundleArgs& a) {
  RunReport r = make_report("report");
  json items = json::array();
  for (const auto& path : a.inputs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    json item{{"path", path}};
    if (fs::path(path).extension() == ".json") {
      try {
        item["json"] = json::parse(ss.str());
      } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
      }
    } else {
      item["text"] = ss.str();
    }
    items.push_back(std::move(item));
  }
  r.outputs["items"] = std::move(items);
  emit(r, a.out);
}

void print_error(std::string_view kind, std::string_view message) {
  json err;
  err["error"] = {{"kind", kind}, {"message", message}};
  std::cerr << err.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonnegative matrix factorization through the principle of the common cause"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Globals g;
  app.add_option("--threads", g.threads, "worker threads (1 keeps runs reproducible)")
      ->check(CLI::PositiveNumber);

  SwimmerGenArgs swim;
  auto* c_swim = app.add_subcommand("swimmer-gen", "write the 169x256 Swimmer matrix");
  c_swim->add_option("-o,--out", swim.out, "output CSV")->required();

  PerturbArgs pert;
  auto* c_pert = app.add_subcommand("perturb", "rescale, binarize or flip-noise a matrix");
  c_pert->add_option("-i,--input", pert.in, "CSV file or PGM directory")->required();
  c_pert->add_option("-o,--out", pert.out, "output CSV")->required();
  c_pert->add_option("--xi", pert.xi, "flip probability")->check(CLI::Range(0.0, 1.0));
  c_pert->add_option("--seed", pert.seed, "noise seed");
  c_pert->add_flag("--binarize", pert.binarize, "threshold at 0.5");
  c_pert->add_flag("--rescale", pert.rescale, "divide by 255");

  FactorizeArgs fac;
  auto* c_fac = app.add_subcommand("factorize", "factorize at one rank and seed");
  c_fac->add_option("-i,--input", fac.in)->required();
  c_fac->add_option("-o,--out", fac.out_dir, "directory for B.csv, W.csv, meta.json")
      ->required();
  c_fac->add_option("--report", fac.report, "report path (default stdout)");
  c_fac->add_option("--rank", fac.rank)->required()->check(CLI::PositiveNumber);
  c_fac->add_option("--seed", fac.seed);
  fac.solver.add_to(c_fac);

  RankScanArgs scan;
  auto* c_scan = app.add_subcommand("rank-scan", "estimate R_c over a rank range");
  c_scan->add_option("-i,--input", scan.in)->required();
  c_scan->add_option("-o,--out", scan.out, "report path (default stdout)");
  c_scan->add_option("--csv", scan.csv, "per-run curve CSV");
  c_scan->add_option("--r-min", scan.r_min)->required()->check(CLI::PositiveNumber);
  c_scan->add_option("--r-max", scan.r_max)->required()->check(CLI::PositiveNumber);
  c_scan->add_option("--tau", scan.tau, "accepted share of invalid pairs")
      ->check(CLI::Range(0.0, 1.0));
  c_scan->add_option("--seeds", scan.seeds, "number of seeds")->check(CLI::PositiveNumber);
  c_scan->add_option("--seed", scan.seed, "first seed");
  c_scan->add_flag("--dual", scan.dual, "check p(i|pi) against p(i|b)");
  scan.solver.add_to(c_scan);

  StabilityArgs stab;
  auto* c_stab = app.add_subcommand("stability", "match bases of two factorizations");
  c_stab->add_option("-i,--input", stab.in)->required();
  c_stab->add_option("-o,--out", stab.out);
  c_stab->add_option("--hist-csv", stab.hist_csv);
  c_stab->add_option("--mode", stab.mode)->check(CLI::IsMember({"noise-split", "seed-pair"}));
  c_stab->add_option("--rank", stab.rank)->required()->check(CLI::PositiveNumber);
  c_stab->add_option("--xi", stab.xi)->check(CLI::Range(0.0, 1.0));
  c_stab->add_option("--seed-a", stab.seed_a);
  c_stab->add_option("--seed-b", stab.seed_b);
  stab.solver.add_to(c_stab);

  ModelArgs an;
  auto* c_an = app.add_subcommand("analyze", "anticorrelation, entropy and sparsity");
  c_an->add_option("-i,--input", an.in)->required();
  c_an->add_option("-f,--factors", an.factors, "directory written by factorize")->required();
  c_an->add_option("-o,--out", an.out);

  ClusterArgs cl;
  auto* c_cl = app.add_subcommand("cluster", "group images by the basis that causes them");
  c_cl->add_option("-i,--input", cl.model.in)->required();
  c_cl->add_option("-f,--factors", cl.model.factors)->required();
  c_cl->add_option("-o,--out", cl.model.out);
  c_cl->add_option("--k", cl.k)->check(CLI::PositiveNumber);
  c_cl->add_option("--require-positive", cl.require_positive, "keep only p(i|b) > p(i)");
  c_cl->add_option("--montage", cl.montage, "directory for PGM strips");

  DenoiseArgs dn;
  auto* c_dn = app.add_subcommand("denoise", "rank sweep of the denoising condition");
  c_dn->add_option("-i,--input", dn.in, "clean matrix")->required();
  c_dn->add_option("--noisy", dn.noisy, "noisy matrix");
  c_dn->add_option("--xi", dn.xi, "flip the clean matrix instead")->check(CLI::Range(0.0, 1.0));
  c_dn->add_option("--noise-seed", dn.noise_seed);
  c_dn->add_option("-o,--out", dn.out);
  c_dn->add_option("--csv", dn.csv);
  c_dn->add_option("--r-lo", dn.r_lo)->required()->check(CLI::PositiveNumber);
  c_dn->add_option("--r-hi", dn.r_hi)->required()->check(CLI::PositiveNumber);
  c_dn->add_option("--step", dn.step)->check(CLI::PositiveNumber);
  c_dn->add_option("--exclusions", dn.exclusions)->check(CLI::NonNegativeNumber);
  c_dn->add_option("--seeds", dn.seeds)->check(CLI::PositiveNumber);
  c_dn->add_option("--seed", dn.seed, "first factorization seed");
  c_dn->add_option("--baseline", dn.baseline)->check(CLI::IsMember({"svd", "none"}));
  dn.solver.add_to(c_dn);

  BundleArgs bundle;
  auto* c_rep = app.add_subcommand("report", "bundle JSON and CSV outputs into one file");
  c_rep->add_option("inputs", bundle.inputs)->required()->check(CLI::ExistingFile);
  c_rep->add_option("-o,--out", bundle.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*c_swim) run_swimmer_gen(swim);
    else if (*c_pert) run_perturb(pert);
    else if (*c_fac) run_factorize(fac);
    else if (*c_scan) run_rank_scan(scan, g);
    else if (*c_stab) run_stability(stab);
    else if (*c_an) run_analyze(an);
    else if (*c_cl) run_cluster(cl);
    else if (*c_dn) run_denoise(dn, g);
    else if (*c_rep) run_report(bundle);
  } catch (const Error& e) {
    print_error(to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
