#include "bandbridge/autograd/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <numeric>

#include "bandbridge/core/error.hpp"

namespace bandbridge::ag {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;

using Index = std::vector<std::uint32_t>;

std::string mismatch(const char* op, const Shape& a, const Shape& b) {
  std::string axes;
  const std::size_t r = std::max(a.rank(), b.rank());
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t da = i < a.rank() ? a[i] : 0;
    const std::size_t db = i < b.rank() ? b[i] : 0;
    if (da != db) axes += (axes.empty() ? "" : ",") + std::to_string(i);
  }
  if (a.rank() != b.rank()) axes += " (rank " + std::to_string(a.rank()) + " vs " + std::to_string(b.rank()) + ")";
  return std::string(op) + ": shape mismatch " + a.str() + " vs " + b.str() + " on axes " + axes;
}

template <typename T>
void require_same(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) throw ShapeError(mismatch(op, a.shape(), b.shape()));
}

template <typename T>
void require_rank(const char* op, const Tensor<T>& x, std::size_t rank) {
  if (x.shape().rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + x.shape().str());
  }
}

template <typename T, typename Fwd, typename Deriv>
Tensor<T> unary(const Tensor<T>& x, const char* name, Fwd fwd, Deriv deriv) {
  const auto in = x.data();
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return make_result<T>(x.shape(), std::move(out), {x}, name, [deriv](Node<T>& self) {
    auto gx = pass_grad(*self.inputs[0]);
    const auto& xin = self.inputs[0]->data;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.pass[i] * deriv(xin[i], self.data[i]);
  });
}

// out[i] = x[index[i]]; the backward rule scatters.
template <typename T>
Tensor<T> gather(const Tensor<T>& x, Shape out_shape, std::shared_ptr<const Index> index, const char* name) {
  const auto in = x.data();
  std::vector<T> out(index->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[(*index)[i]];
  return make_result<T>(std::move(out_shape), std::move(out), {x}, name, [index](Node<T>& self) {
    auto gx = pass_grad(*self.inputs[0]);
    for (std::size_t i = 0; i < index->size(); ++i) gx[(*index)[i]] += self.pass[i];
  });
}

std::vector<std::size_t> strides_of(const Shape& s) {
  std::vector<std::size_t> st(s.rank(), 1);
  for (std::size_t i = s.rank(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

template <typename T>
double accumulate(std::span<const T> v) {
  double acc = 0.0;
  for (const T x : v) acc += static_cast<double>(x);
  return acc;
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same("add", a, b);
  std::vector<T> out(a.numel());
  const auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, "add", [](Node<T>& self) {
    for (auto& in : self.inputs) {
      auto g = pass_grad(*in);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.pass[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same("sub", a, b);
  std::vector<T> out(a.numel());
  const auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, "sub", [](Node<T>& self) {
    auto ga = pass_grad(*self.inputs[0]);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.pass[i];
    auto gb = pass_grad(*self.inputs[1]);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= self.pass[i];
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same("mul", a, b);
  std::vector<T> out(a.numel());
  const auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return make_result<T>(a.shape(), std::move(out), {a, b}, "mul", [](Node<T>& self) {
    const auto& x = self.inputs[0]->data;
    const auto& y = self.inputs[1]->data;
    auto ga = pass_grad(*self.inputs[0]);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.pass[i] * y[i];
    auto gb = pass_grad(*self.inputs[1]);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += self.pass[i] * x[i];
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  return unary<T>(
      x, "scale", [factor](T v) { return v * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T offset) {
  return unary<T>(
      x, "add_scalar", [offset](T v) { return v + offset; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary<T>(
      x, "relu", [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  constexpr T inv_sqrt2pi = std::numbers::inv_sqrtpi_v<T> * inv_sqrt2;
  return unary<T>(
      x, "gelu", [](T v) { return T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2)); },
      [](T v, T) {
        const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
        const T pdf = inv_sqrt2pi * std::exp(T(-0.5) * v * v);
        return cdf + v * pdf;
      });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary<T>(
      x, "sigmoid", [](T v) { return T(1) / (T(1) + std::exp(-v)); }, [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.rank()) throw ShapeError("concat: axis out of range for " + first.str());
  std::vector<std::size_t> dims = first.dims();
  dims[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.rank() == first.rank();
    for (std::size_t i = 0; ok && i < s.rank(); ++i) ok = i == axis || s[i] == first[i];
    if (!ok) throw ShapeError(mismatch("concat", first, s));
    dims[axis] += s[axis];
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
  for (std::size_t i = axis + 1; i < first.rank(); ++i) inner *= first[i];

  std::vector<std::size_t> chunk;
  for (const auto& p : parts) chunk.push_back(p.shape()[axis] * inner);
  const std::size_t row = std::accumulate(chunk.begin(), chunk.end(), std::size_t{0});

  std::vector<T> out(outer * row);
  for (std::size_t o = 0; o < outer; ++o) {
    std::size_t offset = o * row;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const auto src = parts[k].data().subspan(o * chunk[k], chunk[k]);
      std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(offset));
      offset += chunk[k];
    }
  }
  return make_result<T>(Shape(dims), std::move(out), parts, "concat", [chunk, outer, row](Node<T>& self) {
    std::size_t start = 0;
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      auto g = pass_grad(*self.inputs[k]);
      if (!g.empty()) {
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t i = 0; i < chunk[k]; ++i) g[o * chunk[k] + i] += self.pass[o * row + start + i];
        }
      }
      start += chunk[k];
    }
  });
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape& s = x.shape();
  if (axis >= s.rank() || begin >= end || end > s[axis]) {
    throw ShapeError("slice: invalid range [" + std::to_string(begin) + "," + std::to_string(end) + ") on axis " +
                     std::to_string(axis) + " of " + s.str());
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.rank(); ++i) inner *= s[i];
  const std::size_t len = (end - begin) * inner;
  const std::size_t row = s[axis] * inner;
  auto index = std::make_shared<Index>(outer * len);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < len; ++i) (*index)[o * len + i] = static_cast<std::uint32_t>(o * row + begin * inner + i);
  }
  std::vector<std::size_t> dims = s.dims();
  dims[axis] = end - begin;
  return gather(x, Shape(dims), std::move(index), "slice");
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape.numel() != x.numel()) throw ShapeError(mismatch("reshape", x.shape(), shape));
  std::vector<T> out(x.data().begin(), x.data().end());
  return make_result<T>(std::move(shape), std::move(out), {x}, "reshape", [](Node<T>& self) {
    auto g = pass_grad(*self.inputs[0]);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.pass[i];
  });
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& order) {
  const Shape& s = x.shape();
  if (order.size() != s.rank()) throw ShapeError("permute: order length does not match rank of " + s.str());
  std::vector<bool> seen(order.size(), false);
  for (auto a : order) {
    if (a >= order.size() || seen[a]) throw ShapeError("permute: invalid axis order");
    seen[a] = true;
  }
  std::vector<std::size_t> dims(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) dims[i] = s[order[i]];
  const Shape out_shape(dims);
  const auto in_strides = strides_of(s);
  const std::size_t n = x.numel();
  auto index = std::make_shared<Index>(n);
  std::vector<std::size_t> coord(order.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t src = 0;
    for (std::size_t a = 0; a < order.size(); ++a) src += coord[a] * in_strides[order[a]];
    (*index)[i] = static_cast<std::uint32_t>(src);
    for (std::size_t a = order.size(); a-- > 0;) {
      if (++coord[a] < dims[a]) break;
      coord[a] = 0;
    }
  }
  return gather(x, out_shape, std::move(index), "permute");
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x, std::size_t axis_a, std::size_t axis_b) {
  std::vector<std::size_t> order(x.shape().rank());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (axis_a >= order.size() || axis_b >= order.size()) throw ShapeError("transpose: axis out of range");
  std::swap(order[axis_a], order[axis_b]);
  return permute(x, order);
}

template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& x) {
  require_rank("max_pool2d", x, 4);
  const Shape& s = x.shape();
  const std::size_t nc = s[0] * s[1], h = s[2], w = s[3];
  if (h % 2 || w % 2) throw ShapeError("max_pool2d: odd spatial extent in " + s.str());
  const std::size_t ho = h / 2, wo = w / 2;
  const auto in = x.data();
  std::vector<T> out(nc * ho * wo);
  auto argmax = std::make_shared<Index>(out.size());
  for (std::size_t p = 0; p < nc; ++p) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        std::size_t best = (p * h + 2 * oy) * w + 2 * ox;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (p * h + 2 * oy + dy) * w + 2 * ox + dx;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t o = (p * ho + oy) * wo + ox;
        out[o] = in[best];
        (*argmax)[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return make_result<T>(Shape{s[0], s[1], ho, wo}, std::move(out), {x}, "max_pool2d", [argmax](Node<T>& self) {
    auto g = pass_grad(*self.inputs[0]);
    for (std::size_t i = 0; i < argmax->size(); ++i) g[(*argmax)[i]] += self.pass[i];
  });
}

template <typename T>
Tensor<T> upsample_nearest2x(const Tensor<T>& x) {
  require_rank("upsample_nearest2x", x, 4);
  const Shape& s = x.shape();
  const std::size_t nc = s[0] * s[1], h = s[2], w = s[3];
  auto index = std::make_shared<Index>(nc * 4 * h * w);
  std::size_t o = 0;
  for (std::size_t p = 0; p < nc; ++p) {
    for (std::size_t y = 0; y < 2 * h; ++y) {
      for (std::size_t xx = 0; xx < 2 * w; ++xx) (*index)[o++] = static_cast<std::uint32_t>((p * h + y / 2) * w + xx / 2);
    }
  }
  return gather(x, Shape{s[0], s[1], 2 * h, 2 * w}, std::move(index), "upsample_nearest2x");
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  const bool batched = sa.rank() == 3;
  if (!((sa.rank() == 2 && sb.rank() == 2) || (sa.rank() == 3 && sb.rank() == 3 && sa[0] == sb[0]))) {
    throw ShapeError(mismatch("matmul", sa, sb));
  }
  const std::size_t off = batched ? 1 : 0;
  const std::size_t batch = batched ? sa[0] : 1;
  const auto m = static_cast<Eigen::Index>(sa[off]), k = static_cast<Eigen::Index>(sa[off + 1]);
  const auto n = static_cast<Eigen::Index>(sb[off + 1]);
  if (sb[off] != sa[off + 1]) throw ShapeError(mismatch("matmul", sa, sb));

  std::vector<T> out(batch * static_cast<std::size_t>(m * n));
  for (std::size_t i = 0; i < batch; ++i) {
    CMapR<T> A(a.data().data() + i * m * k, m, k);
    CMapR<T> B(b.data().data() + i * k * n, k, n);
    MapR<T> C(out.data() + i * m * n, m, n);
    C.noalias() = A * B;
  }
  Shape out_shape = batched ? Shape{batch, sa[1], sb[2]} : Shape{sa[0], sb[1]};
  return make_result<T>(std::move(out_shape), std::move(out), {a, b}, "matmul", [batch, m, k, n](Node<T>& self) {
    const auto& A = self.inputs[0]->data;
    const auto& B = self.inputs[1]->data;
    auto ga = pass_grad(*self.inputs[0]);
    auto gb = pass_grad(*self.inputs[1]);
    for (std::size_t i = 0; i < batch; ++i) {
      CMapR<T> G(self.pass.data() + i * m * n, m, n);
      if (!ga.empty()) {
        MapR<T> GA(ga.data() + i * m * k, m, k);
        CMapR<T> Bi(B.data() + i * k * n, k, n);
        GA.noalias() += G * Bi.transpose();
      }
      if (!gb.empty()) {
        MapR<T> GB(gb.data() + i * k * n, k, n);
        CMapR<T> Ai(A.data() + i * m * k, m, k);
        GB.noalias() += Ai.transpose() * G;
      }
    }
  });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  const Shape& s = x.shape();
  if (axis >= s.rank()) throw ShapeError("softmax: axis out of range for " + s.str());
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.rank(); ++i) inner *= s[i];
  const std::size_t len = s[axis];
  const auto in = x.data();
  std::vector<T> out(in.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < inner; ++j) {
      const std::size_t base = o * len * inner + j;
      T peak = in[base];
      for (std::size_t l = 1; l < len; ++l) peak = std::max(peak, in[base + l * inner]);
      T total = 0;
      for (std::size_t l = 0; l < len; ++l) {
        const T e = std::exp(in[base + l * inner] - peak);
        out[base + l * inner] = e;
        total += e;
      }
      for (std::size_t l = 0; l < len; ++l) out[base + l * inner] /= total;
    }
  }
  return make_result<T>(s, std::move(out), {x}, "softmax", [outer, inner, len](Node<T>& self) {
    auto g = pass_grad(*self.inputs[0]);
    const auto& y = self.data;
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t j = 0; j < inner; ++j) {
        const std::size_t base = o * len * inner + j;
        T dot = 0;
        for (std::size_t l = 0; l < len; ++l) dot += self.pass[base + l * inner] * y[base + l * inner];
        for (std::size_t l = 0; l < len; ++l) {
          const std::size_t i = base + l * inner;
          g[i] += y[i] * (self.pass[i] - dot);
        }
      }
    }
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  require_rank("layer_norm", x, 4);
  const Shape& s = x.shape();
  const std::size_t c = s[1], plane = s[2] * s[3];
  if (gamma.shape() != Shape{c} || beta.shape() != Shape{c}) {
    throw ShapeError(mismatch("layer_norm", Shape{c}, gamma.shape() != Shape{c} ? gamma.shape() : beta.shape()));
  }
  const auto in = x.data();
  const auto gm = gamma.data(), bt = beta.data();
  const std::size_t positions = s[0] * plane;
  auto xhat = std::make_shared<std::vector<T>>(in.size());
  auto inv_std = std::make_shared<std::vector<T>>(positions);
  std::vector<T> out(in.size());
  for (std::size_t n = 0; n < s[0]; ++n) {
    for (std::size_t p = 0; p < plane; ++p) {
      const std::size_t base = n * c * plane + p;
      T mu = 0;
      for (std::size_t k = 0; k < c; ++k) mu += in[base + k * plane];
      mu /= T(c);
      T var = 0;
      for (std::size_t k = 0; k < c; ++k) {
        const T d = in[base + k * plane] - mu;
        var += d * d;
      }
      var /= T(c);
      const T r = T(1) / std::sqrt(var + eps);
      (*inv_std)[n * plane + p] = r;
      for (std::size_t k = 0; k < c; ++k) {
        const std::size_t i = base + k * plane;
        const T h = (in[i] - mu) * r;
        (*xhat)[i] = h;
        out[i] = gm[k] * h + bt[k];
      }
    }
  }
  return make_result<T>(s, std::move(out), {x, gamma, beta}, "layer_norm",
                        [xhat, inv_std, c, plane, batch = s[0]](Node<T>& self) {
                          const auto& gm = self.inputs[1]->data;
                          auto gx = pass_grad(*self.inputs[0]);
                          auto gg = pass_grad(*self.inputs[1]);
                          auto gb = pass_grad(*self.inputs[2]);
                          std::vector<T> dh(c);
                          for (std::size_t n = 0; n < batch; ++n) {
                            for (std::size_t p = 0; p < plane; ++p) {
                              const std::size_t base = n * c * plane + p;
                              T mean_dh = 0, mean_dh_h = 0;
                              for (std::size_t k = 0; k < c; ++k) {
                                const std::size_t i = base + k * plane;
                                const T g = self.pass[i];
                                if (!gg.empty()) gg[k] += g * (*xhat)[i];
                                if (!gb.empty()) gb[k] += g;
                                dh[k] = g * gm[k];
                                mean_dh += dh[k];
                                mean_dh_h += dh[k] * (*xhat)[i];
                              }
                              if (gx.empty()) continue;
                              mean_dh /= T(c);
                              mean_dh_h /= T(c);
                              const T r = (*inv_std)[n * plane + p];
                              for (std::size_t k = 0; k < c; ++k) {
                                const std::size_t i = base + k * plane;
                                gx[i] += r * (dh[k] - mean_dh - (*xhat)[i] * mean_dh_h);
                              }
                            }
                          }
                        });
}

namespace {

struct ConvGeometry {
  std::size_t cin, h, w, k, stride, pad, ho, wo;
  PaddingMode mode;
  bool pointwise() const { return k == 1 && stride == 1 && pad == 0; }
  std::size_t rows() const { return cin * k * k; }
  std::size_t cols() const { return ho * wo; }
};

// Source coordinate for a padded tap, or -1 when it falls in zero padding.
inline std::ptrdiff_t source(std::ptrdiff_t pos, std::size_t extent, PaddingMode mode) {
  const auto n = static_cast<std::ptrdiff_t>(extent);
  if (pos >= 0 && pos < n) return pos;
  if (mode == PaddingMode::Zero) return -1;
  return ((pos % n) + n) % n;
}

template <typename T>
void im2col(const ConvGeometry& g, const T* x, T* col) {
  for (std::size_t c = 0; c < g.cin; ++c) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        T* row = col + ((c * g.k + ky) * g.k + kx) * g.cols();
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const auto sy = source(static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad),
                                 g.h, g.mode);
          T* dst = row + oy * g.wo;
          if (sy < 0) {
            std::fill(dst, dst + g.wo, T(0));
            continue;
          }
          const T* src = x + (c * g.h + static_cast<std::size_t>(sy)) * g.w;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const auto sx = source(static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad),
                                   g.w, g.mode);
            dst[ox] = sx < 0 ? T(0) : src[sx];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const ConvGeometry& g, const T* col, T* x) {
  for (std::size_t c = 0; c < g.cin; ++c) {
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const T* row = col + ((c * g.k + ky) * g.k + kx) * g.cols();
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const auto sy = source(static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad),
                                 g.h, g.mode);
          if (sy < 0) continue;
          T* dst = x + (c * g.h + static_cast<std::size_t>(sy)) * g.w;
          const T* src = row + oy * g.wo;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const auto sx = source(static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad),
                                   g.w, g.mode);
            if (sx >= 0) dst[sx] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, const Conv2dOptions& options) {
  require_rank("conv2d", input, 4);
  require_rank("conv2d", weight, 4);
  const Shape& si = input.shape();
  const Shape& sw = weight.shape();
  if (sw[1] != si[1]) throw ShapeError(mismatch("conv2d (input channels, axis 1)", si, sw));
  if (sw[2] != sw[3] || sw[2] % 2 == 0) throw ShapeError("conv2d: kernel must be square and odd, got " + sw.str());
  if (bias.shape() != Shape{sw[0]}) throw ShapeError(mismatch("conv2d (bias)", Shape{sw[0]}, bias.shape()));
  if (options.stride == 0) throw ShapeError("conv2d: stride must be positive");
  const std::size_t k = sw[2];
  if (si[2] + 2 * options.padding < k || si[3] + 2 * options.padding < k) {
    throw ShapeError("conv2d: kernel " + sw.str() + " larger than padded input " + si.str());
  }
  if ((si[2] + 2 * options.padding - k) % options.stride || (si[3] + 2 * options.padding - k) % options.stride) {
    throw ShapeError("conv2d: output extent not integral for " + si.str() + " with kernel " + std::to_string(k) +
                     ", stride " + std::to_string(options.stride) + ", padding " + std::to_string(options.padding));
  }
  if (options.mode == PaddingMode::Circular && (options.padding > si[2] || options.padding > si[3])) {
    throw ShapeError("conv2d: circular padding wider than input");
  }
  const ConvGeometry g{si[1],
                       si[2],
                       si[3],
                       k,
                       options.stride,
                       options.padding,
                       (si[2] + 2 * options.padding - k) / options.stride + 1,
                       (si[3] + 2 * options.padding - k) / options.stride + 1,
                       options.mode};
  const std::size_t batch = si[0], cout = sw[0];
  const auto rows = static_cast<Eigen::Index>(g.rows()), cols = static_cast<Eigen::Index>(g.cols());
  const auto co = static_cast<Eigen::Index>(cout);

  std::vector<T> out(batch * cout * g.cols());
  std::vector<T> col(g.pointwise() ? 0 : g.rows() * g.cols());
  CMapR<T> W(weight.data().data(), co, rows);
  const auto b = bias.data();
  for (std::size_t n = 0; n < batch; ++n) {
    const T* x = input.data().data() + n * g.cin * g.h * g.w;
    if (!g.pointwise()) im2col(g, x, col.data());
    CMapR<T> C(g.pointwise() ? x : col.data(), rows, cols);
    MapR<T> Y(out.data() + n * cout * g.cols(), co, cols);
    Y.noalias() = W * C;
    for (std::size_t o = 0; o < cout; ++o) Y.row(static_cast<Eigen::Index>(o)).array() += b[o];
  }

  return make_result<T>(Shape{batch, cout, g.ho, g.wo}, std::move(out), {input, weight, bias}, "conv2d",
                        [g, batch, cout](Node<T>& self) {
                          const auto rows = static_cast<Eigen::Index>(g.rows());
                          const auto cols = static_cast<Eigen::Index>(g.cols());
                          const auto co = static_cast<Eigen::Index>(cout);
                          const auto& xin = self.inputs[0]->data;
                          CMapR<T> W(self.inputs[1]->data.data(), co, rows);
                          auto gx = pass_grad(*self.inputs[0]);
                          auto gw = pass_grad(*self.inputs[1]);
                          auto gb = pass_grad(*self.inputs[2]);
                          std::vector<T> col(g.pointwise() || gw.empty() ? 0 : g.rows() * g.cols());
                          std::vector<T> gcol(g.pointwise() || gx.empty() ? 0 : g.rows() * g.cols());
                          for (std::size_t n = 0; n < batch; ++n) {
                            CMapR<T> G(self.pass.data() + n * cout * g.cols(), co, cols);
                            const T* x = xin.data() + n * g.cin * g.h * g.w;
                            if (!gw.empty()) {
                              if (!g.pointwise()) im2col(g, x, col.data());
                              MapR<T> GW(gw.data(), co, rows);
                              GW.noalias() += G * CMapR<T>(g.pointwise() ? x : col.data(), rows, cols).transpose();
                            }
                            if (!gb.empty()) {
                              for (std::size_t o = 0; o < cout; ++o) {
                                const T* row = self.pass.data() + (n * cout + o) * g.cols();
                                T total = 0;
                                for (std::size_t i = 0; i < g.cols(); ++i) total += row[i];
                                gb[o] += total;
                              }
                            }
                            if (!gx.empty()) {
                              T* gxn = gx.data() + n * g.cin * g.h * g.w;
                              if (g.pointwise()) {
                                MapR<T>(gxn, rows, cols).noalias() += W.transpose() * G;
                              } else {
                                MapR<T>(gcol.data(), rows, cols).noalias() = W.transpose() * G;
                                col2im(g, gcol.data(), gxn);
                              }
                            }
                          }
                        });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  const T total = static_cast<T>(accumulate(x.data()));
  return make_result<T>(Shape{}, {total}, {x}, "sum", [](Node<T>& self) {
    auto g = pass_grad(*self.inputs[0]);
    for (auto& v : g) v += self.pass[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  const double n = static_cast<double>(x.numel());
  const T avg = static_cast<T>(accumulate(x.data()) / n);
  return make_result<T>(Shape{}, {avg}, {x}, "mean", [n](Node<T>& self) {
    auto g = pass_grad(*self.inputs[0]);
    const T share = static_cast<T>(static_cast<double>(self.pass[0]) / n);
    for (auto& v : g) v += share;
  });
}

template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  require_same("l1_loss", pred, target);
  if (target.requires_grad()) throw Error("l1_loss: target must not require grad");
  const auto p = pred.data(), t = target.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(static_cast<double>(p[i]) - static_cast<double>(t[i]));
  const double n = static_cast<double>(p.size());
  return make_result<T>(Shape{}, {static_cast<T>(acc / n)}, {pred, target}, "l1_loss", [n](Node<T>& self) {
    auto g = pass_grad(*self.inputs[0]);
    const auto& p = self.inputs[0]->data;
    const auto& t = self.inputs[1]->data;
    const T share = static_cast<T>(static_cast<double>(self.pass[0]) / n);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (p[i] > t[i]) {
        g[i] += share;
      } else if (p[i] < t[i]) {
        g[i] -= share;
      }
    }
  });
}

namespace {

// Flat image index for every token element, in window_partition order.
std::shared_ptr<Index> window_index(const Shape& s, std::size_t window, std::size_t heads) {
  const std::size_t n = s[0], c = s[1], h = s[2], w = s[3];
  const std::size_t gy = h / window, gx = w / window, dh = c / heads;
  auto index = std::make_shared<Index>(n * c * h * w);
  std::size_t o = 0;
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t wy = 0; wy < gy; ++wy) {
      for (std::size_t wx = 0; wx < gx; ++wx) {
        for (std::size_t hd = 0; hd < heads; ++hd) {
          for (std::size_t ty = 0; ty < window; ++ty) {
            for (std::size_t tx = 0; tx < window; ++tx) {
              const std::size_t y = wy * window + ty, x = wx * window + tx;
              for (std::size_t j = 0; j < dh; ++j) {
                (*index)[o++] = static_cast<std::uint32_t>(((b * c + hd * dh + j) * h + y) * w + x);
              }
            }
          }
        }
      }
    }
  }
  return index;
}

void check_window_geometry(const Shape& s, std::size_t window, std::size_t heads) {
  if (s.rank() != 4) throw ShapeError("window_partition: expected rank 4, got " + s.str());
  if (window == 0 || s[2] % window || s[3] % window) {
    throw ShapeError("window_partition: spatial extent of " + s.str() + " not divisible by window " +
                     std::to_string(window));
  }
  if (heads == 0 || s[1] % heads) {
    throw ShapeError("window_partition: channels of " + s.str() + " not divisible by heads " + std::to_string(heads));
  }
}

}  // namespace

template <typename T>
Tensor<T> window_partition(const Tensor<T>& x, std::size_t window, std::size_t heads) {
  const Shape& s = x.shape();
  check_window_geometry(s, window, heads);
  const std::size_t windows = (s[2] / window) * (s[3] / window);
  return gather(x, Shape{s[0] * windows * heads, window * window, s[1] / heads}, window_index(s, window, heads),
                "window_partition");
}

template <typename T>
Tensor<T> window_merge(const Tensor<T>& tokens, const Shape& image_shape, std::size_t window, std::size_t heads) {
  check_window_geometry(image_shape, window, heads);
  const std::size_t windows = (image_shape[2] / window) * (image_shape[3] / window);
  const Shape expected{image_shape[0] * windows * heads, window * window, image_shape[1] / heads};
  if (tokens.shape() != expected) throw ShapeError(mismatch("window_merge", expected, tokens.shape()));
  const auto forward = window_index(image_shape, window, heads);
  auto inverse = std::make_shared<Index>(forward->size());
  for (std::size_t i = 0; i < forward->size(); ++i) (*inverse)[(*forward)[i]] = static_cast<std::uint32_t>(i);
  return gather(tokens, image_shape, std::move(inverse), "window_merge");
}

#define BANDBRIDGE_INSTANTIATE_OPS(T)                                                                  \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                         \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                         \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                         \
  template Tensor<T> scale(const Tensor<T>&, T);                                                      \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                                 \
  template Tensor<T> relu(const Tensor<T>&);                                                          \
  template Tensor<T> gelu(const Tensor<T>&);                                                          \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                       \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, std::size_t);                              \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t, std::size_t);                  \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                                \
  template Tensor<T> permute(const Tensor<T>&, const std::vector<std::size_t>&);                      \
  template Tensor<T> transpose(const Tensor<T>&, std::size_t, std::size_t);                           \
  template Tensor<T> max_pool2d(const Tensor<T>&);                                                    \
  template Tensor<T> upsample_nearest2x(const Tensor<T>&);                                            \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                                          \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);             \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Conv2dOptions&); \
  template Tensor<T> sum(const Tensor<T>&);                                                           \
  template Tensor<T> mean(const Tensor<T>&);                                                          \
  template Tensor<T> l1_loss(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> window_partition(const Tensor<T>&, std::size_t, std::size_t);                    \
  template Tensor<T> window_merge(const Tensor<T>&, const Shape&, std::size_t, std::size_t);

BANDBRIDGE_INSTANTIATE_OPS(float)
BANDBRIDGE_INSTANTIATE_OPS(double)

}  // namespace bandbridge::ag
