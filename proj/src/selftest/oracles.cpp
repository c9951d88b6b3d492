#include "bandbridge/selftest/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "bandbridge/core/error.hpp"
#include "bandbridge/core/random.hpp"

namespace bandbridge::selftest {

using raster::RasterPatch;

double naive_ssim(const RasterPatch& pred, const RasterPatch& truth) {
  constexpr int k = 11;
  constexpr double sigma = 1.5, c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double kernel[k][k];
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      kernel[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2.0 * sigma * sigma));
      total += kernel[i][j];
    }
  }
  for (auto& row : kernel) {
    for (double& v : row) v /= total;
  }

  const int h = static_cast<int>(truth.height()), w = static_cast<int>(truth.width());
  double sum = 0.0;
  int count = 0;
  for (std::size_t c = 0; c < truth.channels(); ++c) {
    for (int y = 0; y + k <= h; ++y) {
      for (int x = 0; x + k <= w; ++x) {
        double mx = 0, my = 0;
        for (int i = 0; i < k; ++i) {
          for (int j = 0; j < k; ++j) {
            mx += kernel[i][j] * pred.at(c, y + i, x + j);
            my += kernel[i][j] * truth.at(c, y + i, x + j);
          }
        }
        double vx = 0, vy = 0, cov = 0;
        for (int i = 0; i < k; ++i) {
          for (int j = 0; j < k; ++j) {
            const double dx = pred.at(c, y + i, x + j) - mx, dy = truth.at(c, y + i, x + j) - my;
            vx += kernel[i][j] * dx * dx;
            vy += kernel[i][j] * dy * dy;
            cov += kernel[i][j] * dx * dy;
          }
        }
        sum += (2 * mx * my + c1) * (2 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
    }
  }
  return sum / count;
}

double naive_nrmse(const RasterPatch& pred, const RasterPatch& truth) {
  double lo = INFINITY, hi = -INFINITY, sq = 0.0;
  for (std::size_t i = 0; i < truth.pixels().size(); ++i) {
    const double t = truth.pixels()[i], d = pred.pixels()[i] - t;
    lo = std::min(lo, t);
    hi = std::max(hi, t);
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(truth.pixels().size())) / (hi - lo);
}

double constant_shift_ssim(double c, double d) {
  const double c1 = 1e-4;
  // Both variances and the covariance vanish, so the structure term is C2 / C2.
  return (2 * c * (c + d) + c1) / (c * c + (c + d) * (c + d) + c1);
}

std::array<double, 4> catmull_rom_taps(double t) {
  // W(x) = 1.5|x|^3 - 2.5|x|^2 + 1 on [0,1); -0.5|x|^3 + 2.5|x|^2 - 4|x| + 2 on [1,2).
  const auto inner = [](double x) { return 1.5 * x * x * x - 2.5 * x * x + 1.0; };
  const auto outer = [](double x) { return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0; };
  return {outer(1.0 + t), inner(t), inner(1.0 - t), outer(2.0 - t)};
}

std::vector<double> naive_conv2d(const std::vector<double>& input, const ag::Shape& is, const std::vector<double>& weight,
                                 const ag::Shape& ws, const std::vector<double>& bias,
                                 const ag::Conv2dOptions& options) {
  const long n = static_cast<long>(is[0]), cin = static_cast<long>(is[1]), h = static_cast<long>(is[2]),
             w = static_cast<long>(is[3]);
  const long cout = static_cast<long>(ws[0]), k = static_cast<long>(ws[2]);
  const long pad = static_cast<long>(options.padding), stride = static_cast<long>(options.stride);
  const long ho = (h + 2 * pad - k) / stride + 1, wo = (w + 2 * pad - k) / stride + 1;
  std::vector<double> out(static_cast<std::size_t>(n * cout * ho * wo));
  for (long b = 0; b < n; ++b) {
    for (long o = 0; o < cout; ++o) {
      for (long y = 0; y < ho; ++y) {
        for (long x = 0; x < wo; ++x) {
          double acc = bias[static_cast<std::size_t>(o)];
          for (long c = 0; c < cin; ++c) {
            for (long i = 0; i < k; ++i) {
              for (long j = 0; j < k; ++j) {
                long sy = y * stride + i - pad, sx = x * stride + j - pad;
                if (options.mode == ag::PaddingMode::Circular) {
                  sy = ((sy % h) + h) % h;
                  sx = ((sx % w) + w) % w;
                } else if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
                  continue;
                }
                acc += weight[static_cast<std::size_t>(((o * cin + c) * k + i) * k + j)] *
                       input[static_cast<std::size_t>(((b * cin + c) * h + sy) * w + sx)];
              }
            }
          }
          out[static_cast<std::size_t>(((b * cout + o) * ho + y) * wo + x)] = acc;
        }
      }
    }
  }
  return out;
}

RasterPatch random_patch(std::uint64_t seed, std::size_t channels, std::size_t height, std::size_t width, double lo,
                         double hi) {
  if (channels == 0 || channels > raster::kInputBands.size()) throw ShapeError("random_patch: 1..7 channels");
  Rng rng(seed);
  std::vector<float> pixels(channels * height * width);
  for (auto& v : pixels) v = static_cast<float>(rng.uniform(lo, hi));
  return RasterPatch(std::vector<raster::Band>(raster::kInputBands.begin(), raster::kInputBands.begin() + channels),
                     height, width, 10.0f, {}, std::move(pixels));
}

}  // namespace bandbridge::selftest
