#include "bandbridge/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bandbridge/core/error.hpp"

namespace bandbridge::metrics {

using raster::RasterPatch;

namespace {

void require_comparable(const RasterPatch& pred, const RasterPatch& truth, const char* op) {
  if (pred.bands() != truth.bands() || pred.height() != truth.height() || pred.width() != truth.width()) {
    throw ShapeError(std::string(op) + ": prediction " + std::to_string(pred.channels()) + "x" +
                     std::to_string(pred.height()) + "x" + std::to_string(pred.width()) + " does not match truth " +
                     std::to_string(truth.channels()) + "x" + std::to_string(truth.height()) + "x" +
                     std::to_string(truth.width()) + " (bands and extents must agree)");
  }
}

// Valid-mode separable filtering of a plane with the SSIM window.
std::vector<double> filter_valid(const std::vector<double>& plane, std::size_t h, std::size_t w,
                                 const std::array<double, kSsimWindow>& g) {
  const std::size_t ho = h - kSsimWindow + 1, wo = w - kSsimWindow + 1;
  std::vector<double> rows(h * wo);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < wo; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kSsimWindow; ++k) acc += g[k] * plane[y * w + x + k];
      rows[y * wo + x] = acc;
    }
  }
  std::vector<double> out(ho * wo);
  for (std::size_t y = 0; y < ho; ++y) {
    for (std::size_t x = 0; x < wo; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kSsimWindow; ++k) acc += g[k] * rows[(y + k) * wo + x];
      out[y * wo + x] = acc;
    }
  }
  return out;
}

}  // namespace

std::array<double, kSsimWindow> ssim_window() {
  std::array<double, kSsimWindow> g{};
  const double center = static_cast<double>(kSsimWindow / 2);
  double total = 0.0;
  for (std::size_t i = 0; i < kSsimWindow; ++i) {
    const double d = static_cast<double>(i) - center;
    g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    total += g[i];
  }
  for (auto& v : g) v /= total;
  return g;
}

double nrmse(const RasterPatch& pred, const RasterPatch& truth) {
  require_comparable(pred, truth, "nrmse");
  const auto p = pred.pixels(), t = truth.pixels();
  const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
  const double range = static_cast<double>(*hi) - static_cast<double>(*lo);
  if (!(range > 0.0)) throw DataError("nrmse: truth is constant (zero dynamic range)");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = static_cast<double>(p[i]) - static_cast<double>(t[i]);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(p.size())) / range;
}

double ssim(const RasterPatch& pred, const RasterPatch& truth) {
  require_comparable(pred, truth, "ssim");
  const std::size_t h = truth.height(), w = truth.width();
  if (h < kSsimWindow || w < kSsimWindow) {
    throw ShapeError("ssim: image " + std::to_string(h) + "x" + std::to_string(w) + " smaller than the " +
                     std::to_string(kSsimWindow) + "x" + std::to_string(kSsimWindow) + " window");
  }
  const double c1 = (kSsimK1 * kSsimDynamicRange) * (kSsimK1 * kSsimDynamicRange);
  const double c2 = (kSsimK2 * kSsimDynamicRange) * (kSsimK2 * kSsimDynamicRange);
  const auto g = ssim_window();
  const std::size_t n = h * w;

  double band_total = 0.0;
  std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
  for (std::size_t c = 0; c < truth.channels(); ++c) {
    const auto pa = pred.plane(c), pb = truth.plane(c);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = pa[i];
      b[i] = pb[i];
      aa[i] = a[i] * a[i];
      bb[i] = b[i] * b[i];
      ab[i] = a[i] * b[i];
    }
    const auto mu_a = filter_valid(a, h, w, g), mu_b = filter_valid(b, h, w, g);
    const auto e_aa = filter_valid(aa, h, w, g), e_bb = filter_valid(bb, h, w, g), e_ab = filter_valid(ab, h, w, g);
    double acc = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
      const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
      const double cov = e_ab[i] - mu_a[i] * mu_b[i];
      acc += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
             ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2));
    }
    band_total += acc / static_cast<double>(mu_a.size());
  }
  return band_total / static_cast<double>(truth.channels());
}

}  // namespace bandbridge::metrics
