// Benchmark matrices shared across test binaries; the library's experiment
// module owns the data.
#pragma once

#include "ewc/experiments.hpp"
#include "ewc/types.hpp"

namespace fixture {

inline ewc::Matrix bench_affine4() { return ewc::bench::affine4(); }
inline ewc::Matrix stiff4() { return ewc::bench::stiff4(); }
inline ewc::Vector stiff4_eta() { return ewc::bench::stiff4_eta(); }
inline ewc::Matrix unit_radius2(double a) { return ewc::bench::unit_radius2(a); }
inline ewc::Matrix mix5() { return ewc::bench::mix5(); }
inline ewc::Vector mix5_eta() { return ewc::bench::mix5_eta(); }

}  // namespace fixture
