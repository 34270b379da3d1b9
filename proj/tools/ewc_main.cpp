// Command-line front end: certificate checks, damped iteration, zero
// finding, consensus simulation, and the bundled experiment runners.
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ewc/certify.hpp"
#include "ewc/consensus.hpp"
#include "ewc/envelope.hpp"
#include "ewc/experiments.hpp"
#include "ewc/io.hpp"
#include "ewc/iterate.hpp"
#include "ewc/operators.hpp"
#include "ewc/types.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kInfeasible = 2;
constexpr int kDiverged = 3;

struct GlobalOpts {
  std::uint64_t seed = 2026;
  double tol = 1e-9;
  std::string out;
};

void emit(const ewc::Json& j, const GlobalOpts& g, const std::string& filename) {
  std::cout << j.dump(2) << "\n";
  if (!g.out.empty()) ewc::write_json_file(g.out + "/" + filename, j);
}

void prepare_out_dir(const GlobalOpts& g) {
  if (!g.out.empty()) std::filesystem::create_directories(g.out);
}

ewc::Vector load_vector_file(const std::string& path) {
  return ewc::vector_from_json(ewc::read_json_file(path));
}

struct CertifyOpts {
  std::string operator_file;
  double b = 0.0;
  double c = 0.0;
  bool has_c = false;
  std::string eta_file;
  bool eta_ones = false;
  bool optimize = false;
  double perron_tol = 1e-12;
  int perron_iters = 10000;
};

int run_certify(const CertifyOpts& o, const GlobalOpts& g) {
  auto op = ewc::operator_from_json(ewc::read_json_file(o.operator_file));
  ewc::JacobianEnvelope env = op->jacobian_envelope();

  std::optional<ewc::PositiveWeight> fixed;
  if (o.eta_ones)
    fixed.emplace(ewc::Vector::Ones(op->dim()));
  else if (!o.eta_file.empty())
    fixed.emplace(load_vector_file(o.eta_file));

  std::optional<ewc::EwcCertificate> cert;
  if (o.optimize) {
    ewc::RateOptimum opt = ewc::optimize_rate(env, fixed ? &*fixed : nullptr);
    if (!opt.feasible) {
      emit(ewc::Json{{"feasible", false},
                     {"reason", "no shift with a positive contraction margin"}},
           g, "certificate.json");
      return kInfeasible;
    }
    cert = ewc::check_ewc(env, opt.b, opt.c, opt.eta, g.tol);
  } else if (o.has_c) {
    ewc::PositiveWeight eta =
        fixed ? *fixed
              : ewc::find_weight(env, o.b, g.tol, nullptr, o.perron_tol, o.perron_iters).eta;
    cert = ewc::check_ewc(env, o.b, o.c, eta, g.tol);
  } else if (fixed) {
    double c_max = (o.b + 1.0) - ewc::shifted_abs_quotient(env, o.b, fixed->vec());
    if (c_max < 0.0 && c_max >= -g.tol) c_max = 0.0;
    cert = ewc::check_ewc(env, o.b, std::max(0.0, c_max), *fixed, g.tol);
    if (c_max < 0.0) cert->feasible = false;
  } else {
    cert = ewc::find_weight(env, o.b, g.tol, nullptr, o.perron_tol, o.perron_iters).cert;
  }

  if (!cert->feasible) {
    emit(ewc::certificate_to_json(*cert), g, "certificate.json");
    return kInfeasible;
  }
  emit(ewc::certificate_to_json(*cert, ewc::krasnoselskij_plan(*cert)), g,
       "certificate.json");
  return kOk;
}

struct IterateOpts {
  std::string operator_file;
  double theta = 0.5;
  std::string x0_file;
  std::string weight_file;
  int max_iters = 100000;
  double stop_tol = 1e-10;
};

int run_iterate(const IterateOpts& o, const GlobalOpts& g, bool zero_mode) {
  auto op = ewc::operator_from_json(ewc::read_json_file(o.operator_file));
  const ewc::Index n = op->dim();
  ewc::Vector x0 =
      o.x0_file.empty() ? ewc::Vector::Zero(n).eval() : load_vector_file(o.x0_file);
  ewc::PositiveWeight weight(o.weight_file.empty() ? ewc::Vector::Ones(n).eval()
                                                   : load_vector_file(o.weight_file));
  ewc::IterationConfig cfg(o.theta, o.max_iters, o.stop_tol, std::move(weight));
  ewc::IterationTrace trace = zero_mode ? ewc::forward_step(*op, cfg, x0)
                                        : ewc::krasnoselskij(*op, cfg, x0);

  if (!g.out.empty()) ewc::write_trace_csv_file(g.out + "/trace.csv", trace);
  emit(ewc::trace_summary_json(trace), g, "summary.json");
  if (trace.diverged) return kDiverged;
  return trace.converged || trace.stopped_early ? kOk : kDiverged;
}

struct ConsensusOpts {
  std::string model_file;
  std::string x0_file;
  int max_steps = 100000;
  double gap_tol = 1e-8;
};

int run_consensus(const ConsensusOpts& o, const GlobalOpts& g) {
  ewc::MasModel model = ewc::mas_model_from_json(ewc::read_json_file(o.model_file));
  const ewc::Index n = model.graph.n();

  ewc::Vector x0(n);
  if (o.x0_file.empty()) {
    std::mt19937_64 rng(ewc::splitmix64(g.seed));
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (ewc::Index i = 0; i < n; ++i) x0[i] = unif(rng);
  } else {
    x0 = load_vector_file(o.x0_file);
  }

  ewc::ConsensusRun run = ewc::simulate_consensus(model, x0, o.max_steps, o.gap_tol);
  if (!g.out.empty()) ewc::write_trace_csv_file(g.out + "/trace.csv", run.trace);

  ewc::Json j{{"agents", n},
              {"edges", model.graph.edge_count()},
              {"globally_reachable", ewc::has_globally_reachable_node(model.graph)},
              {"theta", model.theta},
              {"steps", run.trace.step_residuals.size()},
              {"final_gap", run.final_gap},
              {"agreement", run.value.has_value()}};
  j["value"] = run.value ? ewc::Json(*run.value) : ewc::Json(nullptr);
  emit(j, g, "summary.json");
  if (run.trace.diverged) return kDiverged;
  return run.value ? kOk : kDiverged;
}

struct ExperimentOpts {
  std::string name;
  int samples = 1000;
  std::vector<int> sizes{5, 10, 20, 50};
  int trials = 10;
  std::vector<double> c_grid{0.2, 0.6, 1.0, 1.25, 1.5, 1.75, 2.0};
};

int run_experiment(const ExperimentOpts& o, const GlobalOpts& g) {
  ewc::Json j;
  if (o.name == "counter") {
    j = ewc::run_counter_experiment(o.samples, g.seed);
  } else if (o.name == "largerss") {
    j = ewc::run_stiff_experiment();
  } else if (o.name == "affine") {
    j = ewc::run_affine_experiment(g.out);
  } else if (o.name == "dnl_single") {
    j = ewc::run_mix_experiment();
  } else if (o.name == "dnl_ratio") {
    ewc::DnlSweepConfig cfg;
    cfg.sizes = o.sizes;
    cfg.trials = o.trials;
    cfg.c_grid = o.c_grid;
    cfg.seed = g.seed;
    std::string csv = g.out.empty() ? "" : g.out + "/rate_ratio.csv";
    j = ewc::run_dnl_sweep_experiment(cfg, csv);
  } else {
    j = ewc::run_consensus_demo(g.seed,
                                g.out.empty() ? "" : g.out + "/consensus_trace.csv");
  }
  emit(j, g, o.name + "_summary.json");
  if (j.contains("certificate") && j["certificate"]["feasible"] == false)
    return kInfeasible;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contractivity certificates and damped fixed-point iteration "
               "under weighted sup-norms"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "Seed for every randomized command");
  app.add_option("--tol", g.tol, "Certificate feasibility tolerance");
  app.add_option("--out", g.out, "Directory for emitted files (created if missing)");

  CertifyOpts cert;
  CLI::App* certify = app.add_subcommand(
      "certify", "Check or search a contraction certificate for an operator");
  certify->add_option("operator", cert.operator_file, "Operator definition JSON")
      ->required()
      ->check(CLI::ExistingFile);
  certify->add_option("--b", cert.b, "Shift parameter");
  CLI::Option* c_opt =
      certify->add_option("--c", cert.c, "Contraction margin to verify");
  certify->add_option("--eta", cert.eta_file, "Weight vector JSON")
      ->check(CLI::ExistingFile);
  certify->add_flag("--eta-ones", cert.eta_ones, "Use the all-ones weight");
  certify->add_flag("--optimize", cert.optimize,
                    "Search the shift minimizing the contraction rate bound");
  certify->add_option("--perron-tol", cert.perron_tol, "Weight-iteration tolerance");
  certify->add_option("--perron-iters", cert.perron_iters, "Weight-iteration cap");

  IterateOpts it;
  CLI::App* iterate = app.add_subcommand(
      "iterate", "Run the damped fixed-point iteration x + theta*(T(x) - x)");
  CLI::App* zero = app.add_subcommand(
      "zero", "Run the forward-step zero finder x - theta*F(x)");
  for (CLI::App* sub : {iterate, zero}) {
    sub->add_option("operator", it.operator_file, "Operator definition JSON")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--theta", it.theta, "Step size in (0, 1]")->required();
    sub->add_option("--x0", it.x0_file, "Start vector JSON (default zeros)")
        ->check(CLI::ExistingFile);
    sub->add_option("--weight", it.weight_file, "Norm weight JSON (default ones)")
        ->check(CLI::ExistingFile);
    sub->add_option("--max-iters", it.max_iters, "Iteration cap");
    sub->add_option("--stop-tol", it.stop_tol, "Stop when the weighted step norm falls below");
  }

  ConsensusOpts cons;
  CLI::App* consensus = app.add_subcommand(
      "consensus", "Simulate damped nonlinear consensus on a network model");
  consensus->add_option("model", cons.model_file, "Network model JSON")
      ->required()
      ->check(CLI::ExistingFile);
  consensus->add_option("--x0", cons.x0_file, "Start vector JSON (default seeded uniform)")
      ->check(CLI::ExistingFile);
  consensus->add_option("--max-steps", cons.max_steps, "Step cap");
  consensus->add_option("--gap-tol", cons.gap_tol, "Agreement gap threshold");

  ExperimentOpts exp;
  CLI::App* experiment =
      app.add_subcommand("experiment", "Run one of the bundled studies");
  experiment->add_option("name", exp.name, "Study name")
      ->required()
      ->check(CLI::IsMember({"counter", "largerss", "affine", "dnl_single",
                             "dnl_ratio", "consensus_demo"}));
  experiment->add_option("--samples", exp.samples, "Random weights tried (counter)");
  experiment->add_option("--sizes", exp.sizes, "Instance sizes (dnl_ratio)")
      ->delimiter(',');
  experiment->add_option("--trials", exp.trials, "Trials per (n, c) cell (dnl_ratio)");
  experiment->add_option("--c-grid", exp.c_grid, "Contraction targets (dnl_ratio)")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  cert.has_c = c_opt->count() > 0;

  try {
    prepare_out_dir(g);
    if (*certify) return run_certify(cert, g);
    if (*iterate) return run_iterate(it, g, false);
    if (*zero) return run_iterate(it, g, true);
    if (*consensus) return run_consensus(cons, g);
    return run_experiment(exp, g);
  } catch (const std::exception& e) {
    std::cerr << ewc::Json{{"error", e.what()}}.dump(2) << "\n";
    return kUsage;
  }
}
