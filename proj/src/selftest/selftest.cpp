#include "bandbridge/selftest/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "bandbridge/core/random.hpp"
#include "bandbridge/metrics/metrics.hpp"
#include "bandbridge/raster/resample.hpp"
#include "bandbridge/selftest/gradcheck.hpp"
#include "bandbridge/selftest/oracles.hpp"

namespace bandbridge::selftest {

namespace {

std::string format(const char* fmt, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

}  // namespace

std::vector<CheckLine> gradient_checks(std::size_t instances) {
  std::vector<CheckLine> lines;
  std::uint64_t seed = 0x5EED;
  for (const auto& factory : gradient_suite()) {
    const auto r = run_gradcheck(factory, instances, seed++);
    char detail[160];
    std::snprintf(detail, sizeof detail, "%zu instances, %zu entries, max rel err %.3g (< %.0e)", r.instances, r.entries,
                  r.max_rel_error, kGradRelTolerance);
    lines.push_back({"gradcheck " + r.name, r.passed, detail});
  }
  return lines;
}

std::vector<CheckLine> metric_checks() {
  std::vector<CheckLine> lines;
  double worst_ssim = 0.0, worst_nrmse = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto a = random_patch(2 * i + 1, 3, 32, 32), b = random_patch(2 * i + 2, 3, 32, 32);
    worst_ssim = std::max(worst_ssim, std::abs(metrics::ssim(a, b) - naive_ssim(a, b)));
    worst_nrmse = std::max(worst_nrmse, std::abs(metrics::nrmse(a, b) - naive_nrmse(a, b)));
  }
  lines.push_back({"ssim vs brute force (100 pairs)", worst_ssim < 1e-9, format("max |diff| %.3g (< 1e-9)", worst_ssim)});
  lines.push_back(
      {"nrmse vs brute force (100 pairs)", worst_nrmse < 1e-9, format("max |diff| %.3g (< 1e-9)", worst_nrmse)});

  double worst_self = 0.0, worst_zero = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto a = random_patch(1000 + i, 6, 32, 32);
    worst_self = std::max(worst_self, std::abs(metrics::ssim(a, a) - 1.0));
    worst_zero = std::max(worst_zero, std::abs(metrics::nrmse(a, a)));
  }
  lines.push_back({"ssim(x, x) == 1", worst_self <= 1e-12, format("max |ssim - 1| %.3g (<= 1e-12)", worst_self)});
  lines.push_back({"nrmse(x, x) == 0", worst_zero == 0.0, format("max nrmse %.3g", worst_zero)});

  const double c = 0.5, d = 0.1;
  raster::RasterPatch x = random_patch(1, 1, 32, 32), y = x;
  for (auto& v : x.mutable_pixels()) v = static_cast<float>(c);
  for (auto& v : y.mutable_pixels()) v = static_cast<float>(c + d);
  const double expected = 0.983609;
  const double got = metrics::ssim(x, y);
  const double closed = constant_shift_ssim(static_cast<float>(c), static_cast<float>(c + d) - static_cast<float>(c));
  lines.push_back({"constant-shift ssim closed form", std::abs(got - expected) < 1e-6 && std::abs(got - closed) < 1e-9,
                   format("ssim %.9f, closed form %.9f, expected 0.983609 within 1e-6", got, closed)});
  return lines;
}

std::vector<CheckLine> bicubic_checks() {
  std::vector<CheckLine> lines;
  const std::array<double, 4> pinned{-0.0703125, 0.8671875, 0.2265625, -0.0234375};
  const auto w = raster::cubic_weights(0.25);
  lines.push_back({"phase-0.25 taps exact", w == pinned && catmull_rom_taps(0.25) == pinned,
                   format("[%.7f, %.7f, ...]", w[0], w[1])});

  // 2x upsampling an impulse reads the same taps back off the output grid.
  raster::RasterPatch impulse = random_patch(1, 1, 1, 8);
  for (auto& v : impulse.mutable_pixels()) v = 0.0f;
  impulse.mutable_pixels()[4] = 1.0f;
  const auto up = raster::bicubic_upsample(impulse, 2, 16);
  const bool impulse_ok = up.at(0, 0, 11) == static_cast<float>(pinned[0]) &&
                          up.at(0, 0, 9) == static_cast<float>(pinned[1]) &&
                          up.at(0, 0, 7) == static_cast<float>(pinned[2]) &&
                          up.at(0, 0, 5) == static_cast<float>(pinned[3]);
  lines.push_back({"2x impulse response", impulse_ok, format("outputs 11,9,7,5 = %.7f, %.7f, ...", up.at(0, 0, 11),
                                                               up.at(0, 0, 9))});

  double worst_const = 0.0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    auto flat = random_patch(50 + i, 6, 16, 16);
    const float value = flat.pixels()[0];
    for (auto& v : flat.mutable_pixels()) v = value;
    const auto big = raster::bicubic_upsample(flat, 64, 64);
    for (const float v : big.pixels()) worst_const = std::max(worst_const, std::abs(static_cast<double>(v - value)));
  }
  lines.push_back({"constant images preserved", worst_const <= 1e-6, format("max deviation %.3g (<= 1e-6)", worst_const)});

  Rng rng(0xB1C0B1C);
  double worst_sum = 0.0, worst_oracle = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double t = rng.uniform();
    const auto taps = raster::cubic_weights(t);
    const auto ref = catmull_rom_taps(t);
    worst_sum = std::max(worst_sum, std::abs(taps[0] + taps[1] + taps[2] + taps[3] - 1.0));
    for (int k = 0; k < 4; ++k) worst_oracle = std::max(worst_oracle, std::abs(taps[k] - ref[k]));
  }
  lines.push_back({"weights sum to 1 (1000 phases)", worst_sum <= 1e-12, format("max |sum - 1| %.3g (<= 1e-12)", worst_sum)});
  lines.push_back({"weights match piecewise cubic", worst_oracle <= 1e-12, format("max |diff| %.3g", worst_oracle)});
  return lines;
}

bool run_selftest(std::ostream& out) {
  bool ok = true;
  for (const auto& group : {gradient_checks(), metric_checks(), bicubic_checks()}) {
    for (const auto& line : group) {
      out << (line.passed ? "PASS  " : "FAIL  ") << line.name << "  (" << line.detail << ")\n";
      ok = ok && line.passed;
    }
  }
  out << (ok ? "selftest passed\n" : "selftest FAILED\n");
  return ok;
}

}  // namespace bandbridge::selftest
