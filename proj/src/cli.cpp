#include "qht/cli.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qht/fock.hpp"
#include "qht/matrix_json.hpp"
#include "qht/records_io.hpp"
#include "qht/sim.hpp"
#include "qht/tomo.hpp"
#include "qht/wigner.hpp"

namespace qht {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string iso_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf.data();
}

int env_threads() {
  const char* v = std::getenv("QHT_THREADS");
  if (!v) return 1;
  const int n = std::atoi(v);
  return n > 0 ? n : 1;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw io_error(path.string() + ": cannot open for writing");
  os << j.dump(2) << "\n";
  if (!os) throw io_error(path.string() + ": write failed");
}

void write_manifest(const fs::path& primary_output, const std::string& command,
                    const json& config, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs,
                    std::optional<std::uint64_t> seed = {}) {
  json j{{"command", command}, {"config", config},       {"inputs", inputs},
         {"outputs", outputs}, {"version", kVersion},    {"threads", env_threads()},
         {"timestamp_utc", iso_now()}};
  if (seed) j["seed"] = *seed;
  write_json_file(primary_output.string() + ".manifest.json", j);
}

void write_scan_csv(const fs::path& path, const BellScanResult& scan) {
  std::ofstream os(path);
  if (!os) throw io_error(path.string() + ": cannot open for writing");
  os << "J,B\n";
  std::array<char, 80> buf{};
  for (const auto& [jv, bv] : scan.points) {
    std::snprintf(buf.data(), buf.size(), "%.17g,%.17g\n", jv, bv);
    os << buf.data();
  }
  os.flush();
  if (!os) throw io_error(path.string() + ": write failed");
  write_json_file(path.string() + ".min.json", json{{"label", scan.label},
                                                    {"min_B", scan.min_b},
                                                    {"argmin_J", scan.argmin_j}});
}

std::vector<double> linspace_grid(double j_max, int steps) {
  const auto steps_z = static_cast<std::size_t>(steps);
  std::vector<double> grid(steps_z);
  for (int i = 0; i < steps; ++i) grid[std::size_t(i)] = j_max * double(i) / double(steps - 1);
  return grid;
}

json psd_summary(const TwoModeDensityMatrix& rho) {
  const double ev = min_eigenvalue(rho);
  return json{{"min_eigenvalue", ev}, {"psd", ev >= -kPsdTol}};
}

json matrix_entries_json(const RMat& m) {
  json arr = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
  return arr;
}

double fidelity_to_psi(const TwoModeDensityMatrix& rho) {
  return 0.5 * (rho(1, 0, 1, 0) + rho(0, 1, 0, 1) + rho(1, 0, 0, 1) + rho(0, 1, 1, 0)).real();
}

struct SimulateArgs {
  double eta = -1.0;
  std::string state_path;
  std::uint64_t n = 0;
  int phase_steps = 12;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "bin";
};

void cmd_simulate(const SimulateArgs& a, bool eta_given) {
  if (eta_given == !a.state_path.empty())
    throw std::invalid_argument("simulate: exactly one of --eta / --state is required");
  SimConfig config = [&] {
    if (eta_given) return SimConfig::model(a.eta, a.n, a.seed, {a.phase_steps});
    auto file = read_density_matrix(a.state_path);
    return SimConfig::from_state(std::move(file.rho), a.n, a.seed, {a.phase_steps});
  }();
  const auto records = sample_records(config);
  const RecordFormat fmt = a.format == "csv" ? RecordFormat::csv : RecordFormat::binary;
  write_records(records, a.out, fmt);
  SimMetadata meta;
  meta.seed = a.seed;
  meta.n_records = a.n;
  meta.relative_steps = a.phase_steps;
  meta.state = eta_given ? "model_state(eta=" + std::to_string(a.eta) + ")" : a.state_path;
  meta.generator = kGeneratorName;
  write_sim_metadata(a.out, meta);
  json config_json{{"n", a.n},           {"phase_steps", a.phase_steps},
                   {"seed", a.seed},     {"format", a.format},
                   {"out", a.out}};
  std::vector<std::string> inputs;
  if (eta_given)
    config_json["eta"] = a.eta;
  else {
    config_json["state"] = a.state_path;
    inputs.push_back(a.state_path);
  }
  write_manifest(a.out, "simulate", config_json, inputs,
                 {a.out, a.out + ".meta.json"}, a.seed);
  std::cout << "wrote " << records.size() << " records to " << a.out << "\n";
}

struct ReconstructArgs {
  std::string in;
  std::string method;
  int dim = 3;
  double eta = -1.0;
  std::string correct;
  std::string blocks;
  std::string out;
  int max_iters = 2000;
  double tol = 1e-8;
  int bin_x = 0;
  int bin_phase = 0;
  int bootstrap = 0;
  std::uint64_t seed = 1;
};

void cmd_reconstruct(const ReconstructArgs& a, bool eta_given) {
  const bool blocks = a.blocks == "global-phase";
  if (a.method == "pf" && eta_given)
    throw std::invalid_argument("reconstruct: --eta applies to --method ml only");
  const auto records = read_records(a.in);
  const ModeDim dim(a.dim);

  json report{{"method", a.method}, {"dim", a.dim}, {"records", records.size()},
              {"source", a.in}};
  TwoModeDensityMatrix estimate(dim);
  bool ml_converged = true;
  if (a.method == "pf") {
    PfResult pf = pf_estimate(records, dim);
    estimate = pf.rho;
    if (blocks) apply_global_phase_mask(estimate);
    report["trace"] = pf.raw_trace;
    report["std_err_max"] = pf.std_err.maxCoeff();
    report["std_err"] = matrix_entries_json(pf.std_err);
  } else {
    MLConfig config;
    config.dim = dim;
    if (eta_given) config.eta = a.eta;
    config.max_iters = a.max_iters;
    config.convergence_tol = a.tol;
    config.enforce_global_phase_blocks = blocks;
    if (a.bin_x > 0 && a.bin_phase > 0) config.binning = MlBinning{a.bin_x, a.bin_phase, 6.0};
    MlResult ml = ml_estimate(records, config);
    estimate = ml.rho;
    ml_converged = ml.converged;
    report["trace"] = estimate.trace().real();
    report["iterations"] = ml.iterations;
    report["converged"] = ml.converged;
    report["log_likelihood"] = ml.log_likelihood;
    report["down_weighted"] = ml.down_weighted;
    if (!ml.warning.empty()) report["warning"] = ml.warning;
    if (config.binning) {
      report["bin_width_x"] = ml.bin_width_x;
      report["bin_width_phase"] = ml.bin_width_phase;
    }
  }
  report["psd"] = psd_summary(estimate);

  TwoModeDensityMatrix final_rho = estimate;
  if (!a.correct.empty()) {
    if (a.correct.rfind("ibt", 0) != 0)
      throw std::invalid_argument("reconstruct: --correct accepts ibt, ibt:auto, or ibt:<eta>");
    double eta_ibt;
    const std::string suffix = a.correct.size() > 3 ? a.correct.substr(4) : "auto";
    if (a.correct.size() > 3 && a.correct[3] != ':')
      throw std::invalid_argument("reconstruct: --correct accepts ibt, ibt:auto, or ibt:<eta>");
    if (suffix == "auto") {
      eta_ibt = 1.0 - estimate(0, 0, 0, 0).real();
      if (!(eta_ibt > 0.0) || eta_ibt > 1.0)
        throw numerical_error("reconstruct: auto efficiency 1 - rho_0000 = " +
                              std::to_string(eta_ibt) + " is outside (0, 1]");
    } else {
      try {
        std::size_t used = 0;
        eta_ibt = std::stod(suffix, &used);
        if (used != suffix.size()) throw std::invalid_argument("trailing garbage");
      } catch (const std::exception&) {
        throw std::invalid_argument("reconstruct: bad --correct efficiency `" + suffix + "`");
      }
    }
    IbtResult ibt = inverse_bernoulli(estimate, eta_ibt);
    final_rho = ibt.rho;
    report["ibt"] = json{{"eta", eta_ibt},
                         {"min_eigenvalue", ibt.min_eigenvalue},
                         {"psd", ibt.psd},
                         {"clipped", ibt.clipped}};
  }

  if (a.bootstrap > 0) {
    Estimator est;
    if (a.method == "pf") {
      est = [dim](const std::vector<QuadratureRecord>& r) { return pf_estimate(r, dim).rho; };
    } else {
      MLConfig config;
      config.dim = dim;
      if (eta_given) config.eta = a.eta;
      config.max_iters = a.max_iters;
      config.convergence_tol = a.tol;
      config.enforce_global_phase_blocks = blocks;
      est = [config](const std::vector<QuadratureRecord>& r) {
        return ml_estimate(r, config).rho;
      };
    }
    BootstrapResult bs = bootstrap_uncertainty(records, est, a.bootstrap, a.seed);
    report["bootstrap"] = json{{"resamples", bs.n_resamples},
                               {"skipped", bs.skipped},
                               {"log_negativity_err", bs.log_negativity_err},
                               {"element_err", matrix_entries_json(bs.element_err)}};
  }

  std::map<std::string, std::string> meta{{"method", a.method},
                                          {"source", a.in},
                                          {"version", kVersion}};
  if (!a.correct.empty()) meta["correct"] = a.correct;
  if (blocks) meta["blocks"] = "global-phase";
  write_density_matrix(a.out, final_rho, meta);
  write_json_file(a.out + ".report.json", report);
  json config_json{{"in", a.in},   {"method", a.method},     {"dim", a.dim},
                   {"out", a.out}, {"max_iters", a.max_iters}, {"tol", a.tol},
                   {"bootstrap", a.bootstrap}, {"seed", a.seed}};
  if (eta_given) config_json["eta"] = a.eta;
  if (!a.correct.empty()) config_json["correct"] = a.correct;
  if (blocks) config_json["blocks"] = a.blocks;
  if (a.bin_x > 0) config_json["bin_x"] = a.bin_x;
  if (a.bin_phase > 0) config_json["bin_phase"] = a.bin_phase;
  write_manifest(a.out, "reconstruct", config_json, {a.in},
                 {a.out, a.out + ".report.json"}, a.seed);
  std::cout << "wrote " << a.out << " (trace " << report["trace"].get<double>() << ")\n";
  if (!ml_converged)
    throw numerical_error("reconstruct: ml did not converge within " +
                          std::to_string(a.max_iters) + " iterations (report written)");
}

struct CheckLine {
  std::string name;
  bool pass;
  std::string detail;
};

void print_checks(const std::vector<CheckLine>& checks) {
  for (const auto& c : checks)
    std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << " — " << c.detail << "\n";
}

struct ReproduceArgs {
  std::string outdir = "paper-run";
  std::uint64_t n = 1000000;
  std::uint64_t seed = 42;
  int ml_max_iters = 500;
  double ml_tol = 1e-8;
  int resamples = 32;
};

void cmd_reproduce(const ReproduceArgs& a) {
  const fs::path dir(a.outdir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error(dir.string() + ": " + ec.message());
  const ModeDim dim(3);
  const double eta = 0.61;

  std::cout << "stage 1/6: simulate " << a.n << " records, model eta=" << eta << "\n";
  const SimConfig sim_config = SimConfig::model(eta, a.n, a.seed);
  const auto records = sample_records(sim_config);
  const fs::path rec_path = dir / "records.qhd";
  write_records(records, rec_path, RecordFormat::binary);
  SimMetadata meta{a.seed, a.n, sim_config.schedule.relative_steps,
                   "model_state(eta=0.61)", kGeneratorName};
  write_sim_metadata(rec_path, meta);

  std::cout << "stage 2/6: pattern-function reconstruction\n";
  const PfResult pf = pf_estimate(records, dim);
  write_density_matrix(dir / "rho_pf.json", pf.rho,
                       {{"method", "pf"}, {"version", kVersion}});
  const double e_n_pf = log_negativity(pf.rho);

  std::cout << "stage 3/6: bootstrap (" << a.resamples << " resamples)\n";
  const BootstrapResult bs = bootstrap_uncertainty(
      records,
      [dim](const std::vector<QuadratureRecord>& r) { return pf_estimate(r, dim).rho; },
      a.resamples, a.seed);

  std::cout << "stage 4/6: inverse Bernoulli (auto efficiency)\n";
  const double eta_auto = 1.0 - pf.rho(0, 0, 0, 0).real();
  if (!(eta_auto > 0.0) || eta_auto > 1.0)
    throw numerical_error("reproduce-paper: auto efficiency outside (0, 1]");
  const IbtResult ibt = inverse_bernoulli(pf.rho, eta_auto);
  write_density_matrix(dir / "rho_ibt.json", ibt.rho,
                       {{"method", "pf+ibt:auto"}, {"version", kVersion}});

  std::cout << "stage 5/6: maximum likelihood with eta correction\n";
  MLConfig ml_config;
  ml_config.dim = dim;
  ml_config.eta = eta;
  ml_config.max_iters = a.ml_max_iters;
  ml_config.convergence_tol = a.ml_tol;
  ml_config.enforce_global_phase_blocks = true;
  const MlResult ml = ml_estimate(records, ml_config);
  write_density_matrix(dir / "rho_ml.json", ml.rho,
                       {{"method", "ml"}, {"version", kVersion}});

  std::cout << "stage 6/6: Bell scans\n";
  const auto grid = default_j_grid();
  const BellScanResult scan_raw = bell_scan(pf.rho, grid);
  const BellScanResult scan_ibt = bell_scan(ibt.rho, grid);
  const BellScanResult scan_061 = bell_scan_analytic(eta, grid);
  const BellScanResult scan_1 = bell_scan_analytic(1.0, grid);
  write_scan_csv(dir / "bell_raw.csv", scan_raw);
  write_scan_csv(dir / "bell_ibt.csv", scan_ibt);
  write_scan_csv(dir / "bell_theory_eta061.csv", scan_061);
  write_scan_csv(dir / "bell_theory_eta1.csv", scan_1);

  std::cout << "\n  J       B(eta=0.61)  B(eta=1)   B(raw)     B(cleaned)\n";
  for (std::size_t i = 0; i < grid.size(); i += 10) {
    std::array<char, 120> buf{};
    std::snprintf(buf.data(), buf.size(), "  %-7.3f %-12.4f %-10.4f %-10.4f %-10.4f\n",
                  grid[i], scan_061.points[i].second, scan_1.points[i].second,
                  scan_raw.points[i].second, scan_ibt.points[i].second);
    std::cout << buf.data();
  }
  std::cout << "\n";

  const double vac = pf.rho(0, 0, 0, 0).real();
  const std::array<double, 4> psi_elems{pf.rho(1, 0, 1, 0).real(), pf.rho(0, 1, 0, 1).real(),
                                        pf.rho(1, 0, 0, 1).real(), pf.rho(0, 1, 1, 0).real()};
  double psi_dev = 0.0;
  for (double p : psi_elems) psi_dev = std::max(psi_dev, std::abs(p - eta / 2.0));
  double multi = 0.0;
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l)
      for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n)
          if (k + l >= 2 || m + n >= 2)
            multi = std::max(multi, std::abs(pf.rho(k, l, m, n)));
  double track = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    track = std::max(track, std::abs(scan_raw.points[i].second - scan_061.points[i].second));
  const double vac_ibt = ibt.rho(0, 0, 0, 0).real();
  const double psi_ibt_dev = std::max({std::abs(ibt.rho(1, 0, 1, 0).real() - 0.5),
                          std::abs(ibt.rho(0, 1, 0, 1).real() - 0.5),
                          std::abs(ibt.rho(1, 0, 0, 1).real() - 0.5),
                          std::abs(ibt.rho(0, 1, 1, 0).real() - 0.5)});

  char detail[160];
  std::vector<CheckLine> checks;
  auto add = [&](const std::string& name, bool pass) {
    checks.push_back({name, pass, detail});
  };
  std::snprintf(detail, sizeof detail, "rho_0000 = %.4f (expect 0.39 +- 0.01)", vac);
  add("vacuum element", std::abs(vac - 0.39) <= 0.01);
  std::snprintf(detail, sizeof detail, "max |elem - 0.305| = %.4f (expect <= 0.01)", psi_dev);
  add("delocalized-photon elements", psi_dev <= 0.01);
  std::snprintf(detail, sizeof detail, "max multi-photon |elem| = %.4f (expect < 0.01)", multi);
  add("multi-photon elements", multi < 0.01);
  std::snprintf(detail, sizeof detail, "E_N = %.4f +- %.4f (expect 0.416 +- 0.02, err <= 0.005)",
                e_n_pf, bs.log_negativity_err);
  add("log negativity", std::abs(e_n_pf - 0.41578) <= 0.02 &&
                            bs.log_negativity_err <= 0.005);
  std::snprintf(detail, sizeof detail,
                "min B = %.4f, max |B - theory(0.61)| = %.4f (expect >= -2, <= 0.05)",
                scan_raw.min_b, track);
  add("raw Bell scan", scan_raw.min_b >= -2.0 && track <= 0.05);
  std::snprintf(detail, sizeof detail,
                "vacuum %.4f (< 0.02), max |Psi - 0.5| = %.4f (<= 0.02), min B = %.4f at J = %.3f",
                vac_ibt, psi_ibt_dev, scan_ibt.min_b, scan_ibt.argmin_j);
  add("vacuum cleaning", vac_ibt < 0.02 && psi_ibt_dev <= 0.02 &&
                             std::abs(scan_ibt.min_b + 2.17) <= 0.05 &&
                             std::abs(scan_ibt.argmin_j - 0.09) <= 0.05);
  const double fid = fidelity_to_psi(ml.rho);
  std::snprintf(detail, sizeof detail,
                "fidelity to the delocalized photon = %.4f (> 0.95), vacuum = %.4f, %d iters%s",
                fid, ml.rho(0, 0, 0, 0).real(), ml.iterations,
                ml.converged ? "" : " (not converged)");
  add("maximum likelihood", fid > 0.95 && ml.rho(0, 0, 0, 0).real() < 0.05);
  print_checks(checks);

  json summary{{"e_n_pf", e_n_pf},
               {"e_n_err", bs.log_negativity_err},
               {"eta_auto", eta_auto},
               {"min_b_raw", scan_raw.min_b},
               {"min_b_cleaned", scan_ibt.min_b},
               {"argmin_j_cleaned", scan_ibt.argmin_j},
               {"ml_fidelity", fid},
               {"ml_iterations", ml.iterations},
               {"checks", json::array()}};
  for (const auto& c : checks)
    summary["checks"].push_back(json{{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  write_json_file(dir / "summary.json", summary);
  write_manifest(dir / "summary.json", "reproduce-paper",
                 json{{"outdir", a.outdir},
                      {"n", a.n},
                      {"seed", a.seed},
                      {"ml_max_iters", a.ml_max_iters},
                      {"ml_tol", a.ml_tol},
                      {"resamples", a.resamples}},
                 {},
                 {(dir / "records.qhd").string(), (dir / "rho_pf.json").string(),
                  (dir / "rho_ibt.json").string(), (dir / "rho_ml.json").string(),
                  (dir / "bell_raw.csv").string(), (dir / "bell_ibt.csv").string(),
                  (dir / "bell_theory_eta061.csv").string(),
                  (dir / "bell_theory_eta1.csv").string(), (dir / "summary.json").string()},
                 a.seed);

  std::vector<std::string> failed;
  for (const auto& c : checks)
    if (!c.pass) failed.push_back(c.name);
  if (!failed.empty()) {
    std::string msg = "reproduce-paper: failed checks:";
    for (const auto& f : failed) msg += " [" + f + "]";
    throw numerical_error(msg);
  }
  std::cout << "all checks passed; artifacts in " << dir.string() << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"two-mode homodyne simulation and tomography toolkit"};
  app.set_version_flag("--version", std::string("qht ") + kVersion);
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "generate quadrature records");
  auto* sim_eta = sim_cmd->add_option("--eta", sim.eta, "model-state efficiency in [0,1]")
                      ->check(CLI::Range(0.0, 1.0));
  sim_cmd->add_option("--state", sim.state_path, "density-matrix JSON to sample instead");
  sim_cmd->add_option("--n", sim.n, "number of records")->required()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--phase-steps", sim.phase_steps, "relative-phase steps per cycle")
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim.seed, "RNG seed");
  sim_cmd->add_option("--out", sim.out, "output record file")->required();
  sim_cmd->add_option("--format", sim.format, "record format")
      ->check(CLI::IsMember({"csv", "bin"}));
  sim_cmd->callback([&] { cmd_simulate(sim, sim_eta->count() > 0); });

  ReconstructArgs rec;
  auto* rec_cmd = app.add_subcommand("reconstruct", "estimate a density matrix from records");
  rec_cmd->add_option("--in", rec.in, "record file (CSV or QHD1)")->required();
  rec_cmd->add_option("--method", rec.method, "estimator")
      ->required()
      ->check(CLI::IsMember({"pf", "ml"}));
  rec_cmd->add_option("--dim", rec.dim, "per-mode truncation")
      ->check(CLI::Range(2, kMaxPhoton + 1));
  auto* rec_eta =
      rec_cmd->add_option("--eta", rec.eta, "ML POVM efficiency correction in (0,1]")
          ->check(CLI::Range(1e-12, 1.0));
  rec_cmd->add_option("--correct", rec.correct, "post-correction: ibt, ibt:auto, ibt:<eta>");
  rec_cmd->add_option("--blocks", rec.blocks, "enforce invariance blocks")
      ->check(CLI::IsMember({"global-phase"}));
  rec_cmd->add_option("--out", rec.out, "output density-matrix JSON")->required();
  rec_cmd->add_option("--max-iters", rec.max_iters, "ML iteration cap")
      ->check(CLI::PositiveNumber);
  rec_cmd->add_option("--tol", rec.tol, "ML convergence tolerance")
      ->check(CLI::PositiveNumber);
  rec_cmd->add_option("--bin-x", rec.bin_x, "ML binning: x bins per axis (0 = unbinned)");
  rec_cmd->add_option("--bin-phase", rec.bin_phase, "ML binning: phase bins per mode");
  rec_cmd->add_option("--bootstrap", rec.bootstrap, "bootstrap resamples for the report");
  rec_cmd->add_option("--seed", rec.seed, "bootstrap seed");
  rec_cmd->callback([&] { cmd_reconstruct(rec, rec_eta->count() > 0); });

  auto* ana = app.add_subcommand("analyze", "derived quantities from matrices");
  ana->require_subcommand(1);

  struct {
    std::string rho, records, method = "pf", out;
    int resamples = 32;
    std::uint64_t seed = 1;
  } neg;
  auto* neg_cmd = ana->add_subcommand("negativity", "logarithmic negativity");
  neg_cmd->add_option("--rho", neg.rho, "density-matrix JSON")->required();
  neg_cmd->add_option("--records", neg.records, "records for a bootstrap error bar");
  neg_cmd->add_option("--method", neg.method, "bootstrap estimator")
      ->check(CLI::IsMember({"pf", "ml"}));
  neg_cmd->add_option("--resamples", neg.resamples)->check(CLI::Range(2, 100000));
  neg_cmd->add_option("--seed", neg.seed);
  neg_cmd->add_option("--out", neg.out, "also write the JSON result here");
  neg_cmd->callback([&] {
    auto file = read_density_matrix(neg.rho);
    json result{{"e_n", log_negativity(file.rho)}};
    if (!neg.records.empty()) {
      const auto records = read_records(neg.records);
      const ModeDim dim = file.rho.dim();
      Estimator est;
      if (neg.method == "pf")
        est = [dim](const std::vector<QuadratureRecord>& r) { return pf_estimate(r, dim).rho; };
      else
        est = [dim](const std::vector<QuadratureRecord>& r) {
          MLConfig c;
          c.dim = dim;
          return ml_estimate(r, c).rho;
        };
      const BootstrapResult bs = bootstrap_uncertainty(records, est, neg.resamples, neg.seed);
      result["bootstrap_err"] = bs.log_negativity_err;
      result["resamples"] = bs.n_resamples;
      result["skipped"] = bs.skipped;
    }
    std::cout << result.dump(2) << "\n";
    if (!neg.out.empty()) {
      write_json_file(neg.out, result);
      write_manifest(neg.out, "analyze negativity",
                     json{{"rho", neg.rho}, {"records", neg.records}, {"out", neg.out}},
                     {neg.rho}, {neg.out});
    }
  });

  struct {
    std::string rho, out;
    double j_max = 0.5;
    int steps = 101;
  } bell;
  auto* bell_cmd = ana->add_subcommand("bell", "Bell scan of a reconstructed matrix");
  bell_cmd->add_option("--rho", bell.rho)->required();
  bell_cmd->add_option("--j-max", bell.j_max)->check(CLI::PositiveNumber);
  bell_cmd->add_option("--steps", bell.steps)->check(CLI::Range(2, 1000000));
  bell_cmd->add_option("--out", bell.out, "output CSV")->required();
  bell_cmd->callback([&] {
    auto file = read_density_matrix(bell.rho);
    auto scan = bell_scan(file.rho, linspace_grid(bell.j_max, bell.steps));
    scan.label = "reconstructed";
    write_scan_csv(bell.out, scan);
    write_manifest(bell.out, "analyze bell",
                   json{{"rho", bell.rho},
                        {"j_max", bell.j_max},
                        {"steps", bell.steps},
                        {"out", bell.out}},
                   {bell.rho}, {bell.out, bell.out + ".min.json"});
    std::cout << "min B = " << scan.min_b << " at J = " << scan.argmin_j << "\n";
  });

  struct {
    double eta = 1.0;
    double j_max = 0.5;
    int steps = 101;
    std::string out;
  } theory;
  auto* theory_cmd = ana->add_subcommand("bell-theory", "analytic Bell curve");
  theory_cmd->add_option("--eta", theory.eta)->required()->check(CLI::Range(0.0, 1.0));
  theory_cmd->add_option("--j-max", theory.j_max)->check(CLI::PositiveNumber);
  theory_cmd->add_option("--steps", theory.steps)->check(CLI::Range(2, 1000000));
  theory_cmd->add_option("--out", theory.out, "output CSV")->required();
  theory_cmd->callback([&] {
    const auto scan = bell_scan_analytic(theory.eta, linspace_grid(theory.j_max, theory.steps));
    write_scan_csv(theory.out, scan);
    write_manifest(theory.out, "analyze bell-theory",
                   json{{"eta", theory.eta},
                        {"j_max", theory.j_max},
                        {"steps", theory.steps},
                        {"out", theory.out}},
                   {}, {theory.out, theory.out + ".min.json"});
    std::cout << "min B = " << scan.min_b << " at J = " << scan.argmin_j << "\n";
  });

  struct {
    std::string out;
  } thr;
  auto* thr_cmd = ana->add_subcommand("threshold", "efficiency threshold for violation");
  thr_cmd->add_option("--out", thr.out, "also write the JSON result here");
  thr_cmd->callback([&] {
    const ThresholdResult t = violation_threshold();
    const json result{{"eta_star", t.eta_star},
                      {"min_B_at_star", t.min_b_at_star},
                      {"tolerance", t.tolerance}};
    std::cout << result.dump(2) << "\n";
    if (!thr.out.empty()) {
      write_json_file(thr.out, result);
      write_manifest(thr.out, "analyze threshold", json{{"out", thr.out}}, {}, {thr.out});
    }
  });

  ReproduceArgs rep;
  auto* rep_cmd = app.add_subcommand("reproduce-paper", "end-to-end pipeline with fixed seeds");
  rep_cmd->add_option("--outdir", rep.outdir, "artifact directory");
  rep_cmd->add_option("--n", rep.n, "records (default 1000000)")->check(CLI::PositiveNumber);
  rep_cmd->add_option("--seed", rep.seed);
  rep_cmd->add_option("--ml-max-iters", rep.ml_max_iters)->check(CLI::PositiveNumber);
  rep_cmd->add_option("--ml-tol", rep.ml_tol)->check(CLI::PositiveNumber);
  rep_cmd->add_option("--resamples", rep.resamples)->check(CLI::Range(2, 100000));
  rep_cmd->callback([&] { cmd_reproduce(rep); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const numerical_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}

}  // namespace qht
