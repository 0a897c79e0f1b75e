#include "layoutgen/numerics/ops.hpp"

#include <cmath>
#include <string>

#include "layoutgen/numerics/kernels.hpp"

namespace layoutgen::num {

namespace {

using Needs = std::vector<bool>;
using Node = Tape::Node;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

void require_rank_at_least(const Tensor& a, int r, const char* op) {
  if (a.rank() < r) {
    throw DimensionError(std::string(op) + ": expected rank >= " + std::to_string(r) + ", got " +
                         to_string(a.shape()));
  }
}

// [outer, C, H*W] view of a channel-structured tensor.
struct ChannelView {
  std::size_t outer;
  int channels;
  std::size_t plane;
};

ChannelView channel_view(const Shape& s, const char* op) {
  if (s.size() < 3) throw DimensionError(std::string(op) + ": expected [.., C, H, W], got " + to_string(s));
  const int c = s[s.size() - 3];
  const std::size_t plane = static_cast<std::size_t>(s[s.size() - 2]) * s[s.size() - 1];
  std::size_t outer = 1;
  for (std::size_t i = 0; i + 3 < s.size(); ++i) outer *= s[i];
  return {outer, c, plane};
}

template <class F>
Tensor map_unary(const Tensor& a, F f) {
  Tensor out(a.shape());
  auto src = a.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <class F>
Tensor map_binary(const Tensor& a, const Tensor& b, F f) {
  Tensor out(a.shape());
  auto x = a.data();
  auto y = b.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) dst[i] = f(x[i], y[i]);
  return out;
}

Shape with_channels(Shape s, int c) {
  s[s.size() - 3] = c;
  return s;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  return track("add", {a, b}, map_binary(a, b, [](float x, float y) { return x + y; }),
               [](const Node&, const Tensor& g, const Needs&) { return std::vector<Tensor>{g, g}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  return track("sub", {a, b}, map_binary(a, b, [](float x, float y) { return x - y; }),
               [](const Node&, const Tensor& g, const Needs& needs) {
                 return std::vector<Tensor>{g, needs[1] ? scale(g, -1.0f) : Tensor()};
               });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  return track("mul", {a, b}, map_binary(a, b, [](float x, float y) { return x * y; }),
               [](const Node& n, const Tensor& g, const Needs& needs) {
                 return std::vector<Tensor>{needs[0] ? mul(g, n.inputs[1]) : Tensor(),
                                            needs[1] ? mul(g, n.inputs[0]) : Tensor()};
               });
}

Tensor scale(const Tensor& a, float s) {
  return track("scale", {a}, map_unary(a, [s](float x) { return x * s; }),
               [s](const Node&, const Tensor& g, const Needs&) {
                 return std::vector<Tensor>{scale(g, s)};
               });
}

Tensor add_scalar(const Tensor& a, float s) {
  return track("add_scalar", {a}, map_unary(a, [s](float x) { return x + s; }),
               [](const Node&, const Tensor& g, const Needs&) { return std::vector<Tensor>{g}; });
}

Tensor square(const Tensor& a) {
  return track("square", {a}, map_unary(a, [](float x) { return x * x; }),
               [](const Node& n, const Tensor& g, const Needs&) {
                 return std::vector<Tensor>{mul(g, scale(n.inputs[0], 2.0f))};
               });
}

Tensor power(const Tensor& a, float p) {
  return track("power", {a}, map_unary(a, [p](float x) { return std::pow(x, p); }),
               [p](const Node& n, const Tensor& g, const Needs&) {
                 return std::vector<Tensor>{mul(g, scale(power(n.inputs[0], p - 1.0f), p))};
               });
}

Tensor mask_mul(const Tensor& a, std::shared_ptr<const std::vector<float>> mask) {
  if (mask->size() != a.numel()) throw DimensionError("mask_mul: mask size mismatch");
  Tensor out(a.shape());
  auto src = a.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * (*mask)[i];
  return track("mask_mul", {a}, out, [mask](const Node&, const Tensor& g, const Needs&) {
    return std::vector<Tensor>{mask_mul(g, mask)};
  });
}

Tensor abs(const Tensor& a) {
  auto sign = std::make_shared<std::vector<float>>(a.numel());
  auto src = a.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    (*sign)[i] = src[i] > 0.0f ? 1.0f : (src[i] < 0.0f ? -1.0f : 0.0f);
  }
  return track("abs", {a}, map_unary(a, [](float x) { return std::fabs(x); }),
               [sign](const Node&, const Tensor& g, const Needs&) {
                 return std::vector<Tensor>{mask_mul(g, sign)};
               });
}

Tensor leaky_relu(const Tensor& a, float alpha) {
  auto slope = std::make_shared<std::vector<float>>(a.numel());
  auto src = a.data();
  Tensor out(a.shape());
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    // Slope at exactly 0 is taken as 1.
    (*slope)[i] = src[i] >= 0.0f ? 1.0f : alpha;
    dst[i] = src[i] * (*slope)[i];
  }
  return track("leaky_relu", {a}, out, [slope](const Node&, const Tensor& g, const Needs&) {
    return std::vector<Tensor>{mask_mul(g, slope)};
  });
}

Tensor tanh(const Tensor& a) {
  return track("tanh", {a}, map_unary(a, [](float x) { return std::tanh(x); }),
               [](const Node& n, const Tensor& g, const Needs&) {
                 return std::vector<Tensor>{mul(g, add_scalar(scale(square(n.output), -1.0f), 1.0f))};
               });
}

Tensor activation(const Tensor& a, Activation kind, float alpha) {
  return kind == Activation::leaky_relu ? leaky_relu(a, alpha) : tanh(a);
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (float v : a.data()) s += v;
  return track("sum", {a}, Tensor::scalar(static_cast<float>(s)),
               [](const Node& n, const Tensor& g, const Needs&) {
                 return std::vector<Tensor>{broadcast_to(g, n.inputs[0].shape())};
               });
}

Tensor broadcast_to(const Tensor& s, const Shape& shape) {
  if (s.numel() != 1) throw DimensionError("broadcast_to: expected a single value");
  return track("broadcast_to", {s}, Tensor(shape, s[0]),
               [](const Node&, const Tensor& g, const Needs&) { return std::vector<Tensor>{sum(g)}; });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw DimensionError("mean of empty tensor");
  return scale(sum(a), 1.0f / static_cast<float>(a.numel()));
}

Tensor l1_distance(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "l1_distance");
  return mean(abs(sub(a, b)));
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (element_count(shape) != a.numel()) {
    throw DimensionError("reshape: " + to_string(a.shape()) + " -> " + to_string(shape));
  }
  std::vector<float> values(a.data().begin(), a.data().end());
  return track("reshape", {a}, Tensor(std::move(shape), std::move(values)),
               [](const Node& n, const Tensor& g, const Needs&) {
                 return std::vector<Tensor>{reshape(g, n.inputs[0].shape())};
               });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  if (k == 0) {
    // Empty inner dimension: zero result.
  } else {
    kernels::gemm(m, n, k, a.data().data(), k, b.data().data(), n, out.data().data(), n, false);
  }
  return track("matmul", {a, b}, out, [](const Node& nd, const Tensor& g, const Needs& needs) {
    return std::vector<Tensor>{needs[0] ? matmul(g, transpose(nd.inputs[1])) : Tensor(),
                               needs[1] ? matmul(transpose(nd.inputs[0]), g) : Tensor()};
  });
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("transpose: expected a matrix, got " + to_string(a.shape()));
  const int r = a.dim(0), c = a.dim(1);
  Tensor out({c, r});
  auto src = a.data();
  auto dst = out.data();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) dst[j * r + i] = src[i * c + j];
  return track("transpose", {a}, out, [](const Node&, const Tensor& g, const Needs&) {
    return std::vector<Tensor>{transpose(g)};
  });
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (input.rank() != 1 || weight.rank() != 2 || bias.rank() != 1 || weight.dim(1) != input.dim(0) ||
      weight.dim(0) != bias.dim(0)) {
    throw DimensionError("linear: input " + to_string(input.shape()) + ", weight " +
                         to_string(weight.shape()) + ", bias " + to_string(bias.shape()));
  }
  const int n = input.dim(0), m = weight.dim(0);
  return add(reshape(matmul(weight, reshape(input, {n, 1})), {m}), bias);
}

Tensor linear_rows(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (input.rank() != 2 || weight.rank() != 2 || bias.rank() != 1 || weight.dim(1) != input.dim(1) ||
      weight.dim(0) != bias.dim(0)) {
    throw DimensionError("linear_rows: input " + to_string(input.shape()) + ", weight " +
                         to_string(weight.shape()) + ", bias " + to_string(bias.shape()));
  }
  const int rows = input.dim(0), m = weight.dim(0);
  Tensor y = reshape(matmul(input, transpose(weight)), {rows, m, 1, 1});
  return reshape(add(y, broadcast_channels(bias, y.shape())), {rows, m});
}

Tensor conv_forward(const Tensor& input, const Tensor& weight, int stride, int padding) {
  if (input.rank() != 4 || weight.rank() != 4) {
    throw DimensionError("conv: expected [N,C,H,W] input and [Co,Ci,k,k] weight, got " +
                         to_string(input.shape()) + " and " + to_string(weight.shape()));
  }
  kernels::ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), input.dim(3),
                          weight.dim(0), weight.dim(2), stride, padding};
  if (weight.dim(1) != g.in_channels) {
    throw DimensionError("conv: input has " + std::to_string(g.in_channels) +
                         " channels, weight expects " + std::to_string(weight.dim(1)));
  }
  if (weight.dim(2) != weight.dim(3) || g.kernel % 2 == 0) {
    throw DimensionError("conv: kernel must be square and odd, got " + to_string(weight.shape()));
  }
  if (stride < 1 || padding < 0 || g.height + 2 * padding < g.kernel || g.width + 2 * padding < g.kernel) {
    throw DimensionError("conv: invalid stride/padding for input " + to_string(input.shape()));
  }
  Tensor out({g.batch, g.out_channels, g.out_height(), g.out_width()});
  kernels::conv2d_forward(g, input.data(), weight.data(), out.data());
  return track("conv_forward", {input, weight}, out,
               [stride, padding](const Node& n, const Tensor& gy, const Needs& needs) {
                 const Tensor& x = n.inputs[0];
                 const Tensor& w = n.inputs[1];
                 return std::vector<Tensor>{
                     needs[0] ? conv_input_grad(gy, w, x.dim(2), x.dim(3), stride, padding) : Tensor(),
                     needs[1] ? conv_weight_grad(x, gy, w.dim(2), stride, padding) : Tensor()};
               });
}

Tensor conv_input_grad(const Tensor& grad_out, const Tensor& weight, int height, int width,
                       int stride, int padding) {
  kernels::ConvGeometry g{grad_out.dim(0), weight.dim(1), height, width,
                          weight.dim(0),   weight.dim(2), stride, padding};
  if (grad_out.rank() != 4 || grad_out.dim(1) != g.out_channels || grad_out.dim(2) != g.out_height() ||
      grad_out.dim(3) != g.out_width()) {
    throw DimensionError("conv_input_grad: gradient shape " + to_string(grad_out.shape()));
  }
  Tensor out({g.batch, g.in_channels, height, width});
  kernels::conv2d_backward_input(g, grad_out.data(), weight.data(), out.data());
  return track("conv_input_grad", {grad_out, weight}, out,
               [stride, padding](const Node& n, const Tensor& gz, const Needs& needs) {
                 const Tensor& gy = n.inputs[0];
                 const Tensor& w = n.inputs[1];
                 return std::vector<Tensor>{
                     needs[0] ? conv_forward(gz, w, stride, padding) : Tensor(),
                     needs[1] ? conv_weight_grad(gz, gy, w.dim(2), stride, padding) : Tensor()};
               });
}

Tensor conv_weight_grad(const Tensor& input, const Tensor& grad_out, int kernel, int stride,
                        int padding) {
  kernels::ConvGeometry g{input.dim(0),    input.dim(1), input.dim(2), input.dim(3),
                          grad_out.dim(1), kernel,       stride,       padding};
  if (grad_out.rank() != 4 || grad_out.dim(0) != g.batch || grad_out.dim(2) != g.out_height() ||
      grad_out.dim(3) != g.out_width()) {
    throw DimensionError("conv_weight_grad: gradient shape " + to_string(grad_out.shape()));
  }
  Tensor out({g.out_channels, g.in_channels, kernel, kernel});
  if (g.batch > 0) kernels::conv2d_backward_weight(g, input.data(), grad_out.data(), out.data());
  return track("conv_weight_grad", {input, grad_out}, out,
               [stride, padding](const Node& n, const Tensor& gw, const Needs& needs) {
                 const Tensor& x = n.inputs[0];
                 const Tensor& gy = n.inputs[1];
                 return std::vector<Tensor>{
                     needs[0] ? conv_input_grad(gy, gw, x.dim(2), x.dim(3), stride, padding) : Tensor(),
                     needs[1] ? conv_forward(x, gw, stride, padding) : Tensor()};
               });
}

Tensor conv2d_nobias(const Tensor& input, const Tensor& weight, int stride, int padding) {
  if (input.rank() == 3) {
    Tensor y = conv_forward(reshape(input, {1, input.dim(0), input.dim(1), input.dim(2)}), weight,
                            stride, padding);
    return reshape(y, {y.dim(1), y.dim(2), y.dim(3)});
  }
  return conv_forward(input, weight, stride, padding);
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int padding) {
  if (bias.rank() != 1 || weight.rank() != 4 || bias.dim(0) != weight.dim(0)) {
    throw DimensionError("conv2d: bias " + to_string(bias.shape()) + " for weight " +
                         to_string(weight.shape()));
  }
  Tensor y = conv2d_nobias(input, weight, stride, padding);
  return add(y, broadcast_channels(bias, y.shape()));
}

Tensor upsample_nearest(const Tensor& input, int factor) {
  require_rank_at_least(input, 2, "upsample_nearest");
  if (factor < 1) throw DimensionError("upsample_nearest: factor must be >= 1");
  const int h = input.dim(-2), w = input.dim(-1);
  const std::size_t planes = h * w == 0 ? 0 : input.numel() / (static_cast<std::size_t>(h) * w);
  Shape shape = input.shape();
  shape[shape.size() - 2] = h * factor;
  shape[shape.size() - 1] = w * factor;
  Tensor out(shape);
  auto src = input.data();
  auto dst = out.data();
  const int ow = w * factor;
  for (std::size_t p = 0; p < planes; ++p) {
    const float* s = src.data() + p * h * w;
    float* d = dst.data() + p * h * w * factor * factor;
    for (int y = 0; y < h * factor; ++y)
      for (int x = 0; x < ow; ++x) d[y * ow + x] = s[(y / factor) * w + x / factor];
  }
  return track("upsample_nearest", {input}, out, [factor](const Node&, const Tensor& g, const Needs&) {
    return std::vector<Tensor>{block_sum(g, factor)};
  });
}

Tensor block_sum(const Tensor& input, int factor) {
  require_rank_at_least(input, 2, "block_sum");
  const int h = input.dim(-2), w = input.dim(-1);
  if (factor < 1 || h % factor != 0 || w % factor != 0) {
    throw DimensionError("block_sum: factor does not divide " + to_string(input.shape()));
  }
  const int oh = h / factor, ow = w / factor;
  const std::size_t planes = h * w == 0 ? 0 : input.numel() / (static_cast<std::size_t>(h) * w);
  Shape shape = input.shape();
  shape[shape.size() - 2] = oh;
  shape[shape.size() - 1] = ow;
  Tensor out(shape);
  auto src = input.data();
  auto dst = out.data();
  for (std::size_t p = 0; p < planes; ++p) {
    const float* s = src.data() + p * h * w;
    float* d = dst.data() + p * oh * ow;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) d[(y / factor) * ow + x / factor] += s[y * w + x];
  }
  return track("block_sum", {input}, out, [factor](const Node&, const Tensor& g, const Needs&) {
    return std::vector<Tensor>{upsample_nearest(g, factor)};
  });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const auto va = channel_view(a.shape(), "concat_channels");
  const auto vb = channel_view(b.shape(), "concat_channels");
  if (a.rank() != b.rank() || with_channels(a.shape(), 0) != with_channels(b.shape(), 0)) {
    throw DimensionError("concat_channels: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  Tensor out(with_channels(a.shape(), va.channels + vb.channels));
  auto dst = out.data();
  const std::size_t na = va.channels * va.plane, nb = vb.channels * vb.plane;
  for (std::size_t o = 0; o < va.outer; ++o) {
    std::copy_n(a.data().data() + o * na, na, dst.data() + o * (na + nb));
    std::copy_n(b.data().data() + o * nb, nb, dst.data() + o * (na + nb) + na);
  }
  const int ca = va.channels, cb = vb.channels;
  return track("concat_channels", {a, b}, out, [ca, cb](const Node&, const Tensor& g, const Needs& needs) {
    return std::vector<Tensor>{needs[0] ? slice_channels(g, 0, ca) : Tensor(),
                               needs[1] ? slice_channels(g, ca, cb) : Tensor()};
  });
}

Tensor slice_channels(const Tensor& a, int start, int count) {
  const auto v = channel_view(a.shape(), "slice_channels");
  if (start < 0 || count < 0 || start + count > v.channels) {
    throw DimensionError("slice_channels: range out of bounds for " + to_string(a.shape()));
  }
  Tensor out(with_channels(a.shape(), count));
  auto dst = out.data();
  for (std::size_t o = 0; o < v.outer; ++o) {
    std::copy_n(a.data().data() + (o * v.channels + start) * v.plane, count * v.plane,
                dst.data() + o * count * v.plane);
  }
  const int total = v.channels;
  return track("slice_channels", {a}, out, [start, total](const Node&, const Tensor& g, const Needs&) {
    return std::vector<Tensor>{pad_channels(g, start, total)};
  });
}

Tensor pad_channels(const Tensor& a, int start, int total) {
  const auto v = channel_view(a.shape(), "pad_channels");
  if (start < 0 || start + v.channels > total) {
    throw DimensionError("pad_channels: range out of bounds for " + to_string(a.shape()));
  }
  Tensor out(with_channels(a.shape(), total));
  auto dst = out.data();
  for (std::size_t o = 0; o < v.outer; ++o) {
    std::copy_n(a.data().data() + o * v.channels * v.plane, v.channels * v.plane,
                dst.data() + (o * total + start) * v.plane);
  }
  const int count = v.channels;
  return track("pad_channels", {a}, out, [start, count](const Node&, const Tensor& g, const Needs&) {
    return std::vector<Tensor>{slice_channels(g, start, count)};
  });
}

Tensor broadcast_channels(const Tensor& bias, const Shape& shape) {
  const auto v = channel_view(shape, "broadcast_channels");
  if (bias.rank() != 1 || bias.dim(0) != v.channels) {
    throw DimensionError("broadcast_channels: bias " + to_string(bias.shape()) + " for " + to_string(shape));
  }
  Tensor out(shape);
  auto dst = out.data();
  for (std::size_t o = 0; o < v.outer; ++o)
    for (int c = 0; c < v.channels; ++c)
      std::fill_n(dst.data() + (o * v.channels + c) * v.plane, v.plane, bias[c]);
  return track("broadcast_channels", {bias}, out, [](const Node&, const Tensor& g, const Needs&) {
    return std::vector<Tensor>{channel_sum(g)};
  });
}

Tensor channel_sum(const Tensor& a) {
  const auto v = channel_view(a.shape(), "channel_sum");
  std::vector<double> acc(v.channels, 0.0);
  auto src = a.data();
  for (std::size_t o = 0; o < v.outer; ++o)
    for (int c = 0; c < v.channels; ++c) {
      const float* p = src.data() + (o * v.channels + c) * v.plane;
      double s = 0.0;
      for (std::size_t i = 0; i < v.plane; ++i) s += p[i];
      acc[c] += s;
    }
  Tensor out({v.channels});
  for (int c = 0; c < v.channels; ++c) out.data()[c] = static_cast<float>(acc[c]);
  return track("channel_sum", {a}, out, [](const Node& n, const Tensor& g, const Needs&) {
    return std::vector<Tensor>{broadcast_channels(g, n.inputs[0].shape())};
  });
}

MixMatrix MixMatrix::transposed() const {
  MixMatrix t{cols, rows, std::vector<float>(values.size())};
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) t.values[j * rows + i] = values[i * cols + j];
  return t;
}

Tensor mix_components(const Tensor& input, std::shared_ptr<const MixMatrix> matrix) {
  if (input.rank() < 1 || input.dim(0) != matrix->cols) {
    throw DimensionError("mix_components: matrix has " + std::to_string(matrix->cols) +
                         " columns, input " + to_string(input.shape()));
  }
  const std::size_t item = matrix->cols == 0 ? 0 : input.numel() / matrix->cols;
  Shape shape = input.shape();
  shape[0] = matrix->rows;
  Tensor out(shape);
  auto src = input.data();
  auto dst = out.data();
  std::vector<double> acc(item);
  for (int r = 0; r < matrix->rows; ++r) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int c = 0; c < matrix->cols; ++c) {
      const double w = matrix->values[r * matrix->cols + c];
      if (w == 0.0) continue;
      const float* s = src.data() + c * item;
      for (std::size_t i = 0; i < item; ++i) acc[i] += w * s[i];
    }
    for (std::size_t i = 0; i < item; ++i) dst[r * item + i] = static_cast<float>(acc[i]);
  }
  return track("mix_components", {input}, out, [matrix](const Node&, const Tensor& g, const Needs&) {
    return std::vector<Tensor>{
        mix_components(g, std::make_shared<const MixMatrix>(matrix->transposed()))};
  });
}

}  // namespace layoutgen::num
