// Reproducible experiment runners behind the CLI: benchmark certifications,
// step-plan comparisons, consensus demos, and the randomized rate-ratio
// sweep.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "ewc/certify.hpp"
#include "ewc/io.hpp"
#include "ewc/operators.hpp"
#include "ewc/types.hpp"

namespace ewc {

namespace bench {

/// 4x4 affine benchmark with spectral radius 1.122; not weakly contractive
/// under any weighted sup-norm, certifiable after a diagonal shift.
Matrix affine4();

/// Stiff 4x4 benchmark (diagonal floor 7.5) and the weight certifying it.
Matrix stiff4();
Vector stiff4_eta();

/// Upper-triangular family with spectral radius exactly 1, semisimple for
/// a != 1, that defeats weighted sup-norm weak contractivity outright.
Matrix unit_radius2(double a);

/// 5x5 sector-bounded benchmark and its published certificate weight.
Matrix mix5();
Vector mix5_eta();

}  // namespace bench

/// Deterministic seed scrambler for stream derivation.
uint64_t splitmix64(uint64_t x);

struct DnlSweepConfig {
  std::vector<int> sizes{5, 10, 20};
  int trials = 10;
  std::vector<double> c_grid{0.2, 0.6, 1.0, 1.25, 1.5, 1.75, 2.0};
  uint64_t seed = 2026;
  SectorBounds sector{0.1, 1.0};
};

struct DnlRatioRow {
  int n = 0;
  double c_target = 0.0;
  int trial = 0;
  double rate_opt = 0.0;
  double rate_baseline = 0.0;
  double ratio = 0.0;
};

struct DnlSweepResult {
  std::vector<DnlRatioRow> rows;
  int skipped = 0;

  double mean_ratio(double c_target) const;
  double max_ratio() const;
};

/// Random sector-bounded instance targeting monotonicity modulus near
/// c_target: normal entries at variance 1/n, diagonal capped so the sector
/// keeps the target reachable, at least one nonpositive diagonal entry, and
/// offdiagonals shrunk until the joint Metzler root leaves the target margin.
Matrix generate_dnl_matrix(Index n, double c_target, SectorBounds sector,
                           std::mt19937_64& rng);

/// Certified rate of the optimized shift against the monotone baseline over
/// the full grid of sizes, targets, and trials.
DnlSweepResult sweep_dnl(const DnlSweepConfig& cfg);

void write_dnl_csv(std::ostream& out, const DnlSweepResult& result);
Json dnl_summary_json(const DnlSweepResult& result);

/// Named experiment entry points; each returns a JSON summary.
Json run_counter_experiment(int eta_samples, uint64_t seed);
Json run_stiff_experiment();
Json run_affine_experiment(const std::string& trace_dir = "");
Json run_mix_experiment();
Json run_consensus_demo(uint64_t seed, const std::string& trace_csv_path);
Json run_dnl_sweep_experiment(const DnlSweepConfig& cfg, const std::string& csv_path);

}  // namespace ewc
