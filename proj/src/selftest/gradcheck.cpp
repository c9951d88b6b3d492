#include "bandbridge/selftest/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bandbridge/autograd/ops.hpp"
#include "bandbridge/models/model.hpp"

namespace bandbridge::selftest {

using ag::Shape;
using ag::Tensord;

namespace {

Tensord random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape.numel());
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensord(std::move(shape), std::move(v), true);
}

// Values bounded away from zero, for ops with a kink there.
Tensord away_from_zero(Rng& rng, Shape shape) {
  std::vector<double> v(shape.numel());
  for (auto& x : v) x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.05, 1.0);
  return Tensord(std::move(shape), std::move(v), true);
}

double weighted_sum(const Tensord& out, const std::vector<double>& weights) {
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += out.data()[i] * weights[i];
  return acc;
}

std::vector<std::size_t> pick_entries(std::size_t numel, std::size_t limit, Rng& rng) {
  std::vector<std::size_t> all(numel);
  std::iota(all.begin(), all.end(), 0);
  if (numel <= limit) return all;
  rng.shuffle(std::span<std::size_t>(all));
  all.resize(limit);
  return all;
}

GradCase unary(Rng& rng, Tensord x, Tensord (*op)(const Tensord&)) {
  (void)rng;
  return {{std::move(x)}, [op](const auto& in) { return op(in[0]); }};
}

GradCase model_case(Rng& rng, models::ModelSpec spec, std::size_t size) {
  spec.seed = rng.next_u64();
  auto params = models::build<double>(spec);
  std::vector<std::string> names;
  GradCase c;
  for (auto& p : params.entries()) {
    // Zero-initialised tensors (the head, biases) would hide every upstream
    // gradient; give them random values.
    auto data = p.value.mutable_data();
    if (std::all_of(data.begin(), data.end(), [](double v) { return v == 0.0; })) {
      for (auto& v : data) v = rng.uniform(-0.2, 0.2);
    }
    names.push_back(p.name);
    c.inputs.push_back(p.value);
  }
  c.inputs.push_back(random_tensor(rng, Shape{1, spec.in_channels, size, size}, 0.0, 1.0));
  c.fn = [spec, names](const std::vector<Tensord>& in) {
    models::ParameterSet<double> set;
    for (std::size_t i = 0; i < names.size(); ++i) set.add(names[i], in[i], "given");
    return models::forward(spec, set, in.back());
  };
  c.max_entries_per_input = 12;
  return c;
}

GradCase conv_case(Rng& rng, std::size_t k, ag::Conv2dOptions options) {
  const std::size_t cin = 1 + rng.below(3), cout = 1 + rng.below(3);
  auto x = random_tensor(rng, Shape{2, cin, 7, 9});
  auto w = random_tensor(rng, Shape{cout, cin, k, k});
  auto b = random_tensor(rng, Shape{cout});
  return {{x, w, b}, [options](const auto& in) { return ag::conv2d(in[0], in[1], in[2], options); }};
}

}  // namespace

GradCheckResult check_case(const std::string& name, const GradCase& c, Rng& rng) {
  std::vector<Tensord> leaves;
  for (const auto& t : c.inputs) {
    leaves.emplace_back(t.shape(), std::vector<double>(t.data().begin(), t.data().end()), true);
  }
  const Tensord probe = c.fn(leaves);
  std::vector<double> weights(probe.numel());
  for (auto& w : weights) w = rng.uniform(-1.0, 1.0);
  const Tensord weight_tensor(probe.shape(), weights);
  ag::sum(ag::mul(probe, weight_tensor)).backward();

  GradCheckResult result{name, 1, 0, 0.0, true};
  const ag::NoGradGuard guard;
  for (auto& leaf : leaves) {
    const std::vector<double> analytic(leaf.grad().begin(), leaf.grad().end());
    for (const std::size_t j : pick_entries(leaf.numel(), c.max_entries_per_input, rng)) {
      auto data = leaf.mutable_data();
      const double original = data[j];
      data[j] = original + kFiniteStep;
      const double plus = weighted_sum(c.fn(leaves), weights);
      data[j] = original - kFiniteStep;
      const double minus = weighted_sum(c.fn(leaves), weights);
      data[j] = original;
      const double numeric = (plus - minus) / (2.0 * kFiniteStep);
      const double scale = std::max({std::abs(analytic[j]), std::abs(numeric), kGradAbsFloor / kGradRelTolerance});
      const double rel = std::abs(analytic[j] - numeric) / scale;
      result.max_rel_error = std::max(result.max_rel_error, rel);
      ++result.entries;
    }
  }
  result.passed = result.max_rel_error < kGradRelTolerance;
  return result;
}

GradCheckResult run_gradcheck(const NamedFactory& factory, std::size_t instances, std::uint64_t seed) {
  GradCheckResult total{factory.name, 0, 0, 0.0, true};
  const Rng root(seed);
  for (std::size_t i = 0; i < instances; ++i) {
    Rng rng = root.split(i);
    const auto one = check_case(factory.name, factory.make(rng), rng);
    ++total.instances;
    total.entries += one.entries;
    total.max_rel_error = std::max(total.max_rel_error, one.max_rel_error);
    total.passed = total.passed && one.passed;
  }
  return total;
}

std::vector<NamedFactory> gradient_suite() {
  std::vector<NamedFactory> suite;
  const auto binary = [](Tensord (*op)(const Tensord&, const Tensord&)) {
    return [op](Rng& rng) {
      const Shape s{2, 3, 4};
      return GradCase{{random_tensor(rng, s), random_tensor(rng, s)}, [op](const auto& in) { return op(in[0], in[1]); }};
    };
  };
  suite.push_back({"add", binary(&ag::add<double>)});
  suite.push_back({"sub", binary(&ag::sub<double>)});
  suite.push_back({"mul", binary(&ag::mul<double>)});
  suite.push_back({"scale", [](Rng& rng) {
                     const double f = rng.uniform(-2.0, 2.0);
                     return GradCase{{random_tensor(rng, Shape{3, 5})}, [f](const auto& in) { return ag::scale(in[0], f); }};
                   }});
  suite.push_back({"add_scalar", [](Rng& rng) {
                     const double f = rng.uniform(-2.0, 2.0);
                     return GradCase{{random_tensor(rng, Shape{3, 5})},
                                     [f](const auto& in) { return ag::add_scalar(in[0], f); }};
                   }});
  suite.push_back({"relu", [](Rng& rng) { return unary(rng, away_from_zero(rng, Shape{4, 6}), &ag::relu<double>); }});
  suite.push_back(
      {"gelu", [](Rng& rng) { return unary(rng, random_tensor(rng, Shape{4, 6}, -3.0, 3.0), &ag::gelu<double>); }});
  suite.push_back({"sigmoid",
                   [](Rng& rng) { return unary(rng, random_tensor(rng, Shape{4, 6}, -4.0, 4.0), &ag::sigmoid<double>); }});
  suite.push_back({"concat", [](Rng& rng) {
                     const std::size_t axis = rng.below(3);
                     std::vector<Tensord> parts;
                     for (std::size_t i = 0; i < 3; ++i) {
                       std::vector<std::size_t> dims{2, 3, 4};
                       dims[axis] = 1 + rng.below(3);
                       parts.push_back(random_tensor(rng, Shape(dims)));
                     }
                     return GradCase{parts, [axis](const auto& in) { return ag::concat(in, axis); }};
                   }});
  suite.push_back({"slice", [](Rng& rng) {
                     const std::size_t axis = rng.below(3);
                     const std::vector<std::size_t> dims{3, 5, 4};
                     const std::size_t begin = rng.below(dims[axis]);
                     const std::size_t end = begin + 1 + rng.below(dims[axis] - begin);
                     return GradCase{{random_tensor(rng, Shape(dims))},
                                     [=](const auto& in) { return ag::slice(in[0], axis, begin, end); }};
                   }});
  suite.push_back({"reshape", [](Rng& rng) {
                     return GradCase{{random_tensor(rng, Shape{2, 3, 4})},
                                     [](const auto& in) { return ag::reshape(in[0], Shape{4, 6}); }};
                   }});
  suite.push_back({"permute", [](Rng& rng) {
                     std::vector<std::size_t> order{0, 1, 2, 3};
                     rng.shuffle(std::span<std::size_t>(order));
                     return GradCase{{random_tensor(rng, Shape{2, 3, 4, 5})},
                                     [order](const auto& in) { return ag::permute(in[0], order); }};
                   }});
  suite.push_back({"transpose", [](Rng& rng) {
                     const std::size_t a = rng.below(3), b = (a + 1 + rng.below(2)) % 3;
                     return GradCase{{random_tensor(rng, Shape{2, 3, 4})},
                                     [=](const auto& in) { return ag::transpose(in[0], a, b); }};
                   }});
  suite.push_back({"max_pool2d", [](Rng& rng) {
                     return unary(rng, random_tensor(rng, Shape{2, 3, 4, 6}), &ag::max_pool2d<double>);
                   }});
  suite.push_back({"upsample_nearest2x", [](Rng& rng) {
                     return unary(rng, random_tensor(rng, Shape{2, 2, 3, 4}), &ag::upsample_nearest2x<double>);
                   }});
  suite.push_back({"matmul", [](Rng& rng) {
                     const std::size_t m = 1 + rng.below(4), k = 1 + rng.below(4), n = 1 + rng.below(4);
                     return GradCase{{random_tensor(rng, Shape{m, k}), random_tensor(rng, Shape{k, n})},
                                     [](const auto& in) { return ag::matmul(in[0], in[1]); }};
                   }});
  suite.push_back({"matmul_batched", [](Rng& rng) {
                     const std::size_t b = 1 + rng.below(3), m = 1 + rng.below(4), k = 1 + rng.below(4),
                                       n = 1 + rng.below(4);
                     return GradCase{{random_tensor(rng, Shape{b, m, k}), random_tensor(rng, Shape{b, k, n})},
                                     [](const auto& in) { return ag::matmul(in[0], in[1]); }};
                   }});
  suite.push_back({"softmax", [](Rng& rng) {
                     const std::size_t axis = rng.below(3);
                     return GradCase{{random_tensor(rng, Shape{2, 3, 4}, -3.0, 3.0)},
                                     [axis](const auto& in) { return ag::softmax(in[0], axis); }};
                   }});
  suite.push_back({"layer_norm", [](Rng& rng) {
                     return GradCase{{random_tensor(rng, Shape{2, 4, 3, 3}), random_tensor(rng, Shape{4}),
                                      random_tensor(rng, Shape{4})},
                                     [](const auto& in) { return ag::layer_norm(in[0], in[1], in[2]); }};
                   }});
  suite.push_back({"conv2d_zero", [](Rng& rng) { return conv_case(rng, 3, {1, 1, ag::PaddingMode::Zero}); }});
  suite.push_back(
      {"conv2d_circular", [](Rng& rng) { return conv_case(rng, 3, {1, 1, ag::PaddingMode::Circular}); }});
  suite.push_back({"conv2d_stride2", [](Rng& rng) { return conv_case(rng, 3, {2, 1, ag::PaddingMode::Zero}); }});
  suite.push_back({"conv2d_pointwise", [](Rng& rng) { return conv_case(rng, 1, {1, 0, ag::PaddingMode::Zero}); }});
  suite.push_back({"sum", [](Rng& rng) { return unary(rng, random_tensor(rng, Shape{3, 4}), &ag::sum<double>); }});
  suite.push_back({"mean", [](Rng& rng) { return unary(rng, random_tensor(rng, Shape{3, 4}), &ag::mean<double>); }});
  suite.push_back({"l1_loss", [](Rng& rng) {
                     auto pred = random_tensor(rng, Shape{2, 3, 4});
                     std::vector<double> t(pred.numel());
                     for (std::size_t i = 0; i < t.size(); ++i) {
                       t[i] = pred.data()[i] + (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.05, 0.5);
                     }
                     const Tensord target(pred.shape(), std::move(t));
                     return GradCase{{pred}, [target](const auto& in) { return ag::l1_loss(in[0], target); }};
                   }});
  suite.push_back({"window_partition", [](Rng& rng) {
                     return GradCase{{random_tensor(rng, Shape{1, 8, 8, 8})},
                                     [](const auto& in) { return ag::window_partition(in[0], 4, 2); }};
                   }});
  suite.push_back({"window_merge", [](Rng& rng) {
                     const Shape image{1, 8, 8, 8};
                     return GradCase{{random_tensor(rng, Shape{8, 16, 4})},
                                     [image](const auto& in) { return ag::window_merge(in[0], image, 4, 2); }};
                   }});
  suite.push_back({"unet", [](Rng& rng) {
                     models::ModelSpec spec;
                     spec.kind = models::ModelKind::Unet;
                     spec.unet = {2, 4};
                     return model_case(rng, spec, 8);
                   }});
  suite.push_back({"esrt_lite", [](Rng& rng) {
                     models::ModelSpec spec;
                     spec.kind = models::ModelKind::EsrtLite;
                     spec.esrt = {1, 1, 8, 2, 4, 2};
                     return model_case(rng, spec, 8);
                   }});
  return suite;
}

}  // namespace bandbridge::selftest
