#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bandbridge/autograd/tensor.hpp"
#include "bandbridge/core/random.hpp"

namespace bandbridge::selftest {

inline constexpr double kGradRelTolerance = 1e-4;
inline constexpr double kGradAbsFloor = 1e-6;  // differences below this count as agreement
inline constexpr double kFiniteStep = 1e-6;

// One random instance: leaves to differentiate and the function of them.
struct GradCase {
  std::vector<ag::Tensord> inputs;
  std::function<ag::Tensord(const std::vector<ag::Tensord>&)> fn;
  std::size_t max_entries_per_input = 64;  // sampled when an input is larger
};

struct GradCheckResult {
  std::string name;
  std::size_t instances = 0;
  std::size_t entries = 0;
  double max_rel_error = 0.0;
  bool passed = true;
};

// Central finite differences on loss = sum(fn(inputs) * R) for a fixed
// random R, against reverse-mode gradients.
GradCheckResult check_case(const std::string& name, const GradCase& c, Rng& rng);

using CaseFactory = std::function<GradCase(Rng&)>;

struct NamedFactory {
  std::string name;
  CaseFactory make;
};

// Every differentiable op plus small UNet and ESRT-lite models.
std::vector<NamedFactory> gradient_suite();

GradCheckResult run_gradcheck(const NamedFactory& factory, std::size_t instances, std::uint64_t seed);

}  // namespace bandbridge::selftest
