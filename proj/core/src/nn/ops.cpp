#include "tlsr/nn/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tlsr::nn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

int reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n - 2;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - m;
}

// For every kernel tap and output pixel: the source pixel index (reflect padding).
std::vector<int> build_reflect_map(int h, int w, int k) {
  const int r = k / 2;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  std::vector<int> map(static_cast<std::size_t>(k) * k * hw);
  for (int ky = 0; ky < k; ++ky)
    for (int kx = 0; kx < k; ++kx) {
      int* m = map.data() + (static_cast<std::size_t>(ky) * k + kx) * hw;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m[y * w + x] = reflect101(y + ky - r, h) * w + reflect101(x + kx - r, w);
    }
  return map;
}

// Output rows [y0, y1) of one (sample, group). cols is (cin * k * k) x ((y1 - y0) * w).
struct RowBand {
  int y0, y1;
  std::size_t cols() const { return static_cast<std::size_t>(y1 - y0); }
};

void im2col_band(const double* x, int channels, int h, int w, int k, const std::vector<int>& reflect, RowBand band,
                 double* cols) {
  const int r = k / 2;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  const std::size_t n = band.cols() * w;
  for (int ci = 0; ci < channels; ++ci) {
    const double* src = x + ci * hw;
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const int tap = ky * k + kx;
        double* dst = cols + (static_cast<std::size_t>(ci) * k * k + tap) * n;
        if (!reflect.empty()) {
          const int* m = reflect.data() + tap * hw + static_cast<std::size_t>(band.y0) * w;
          for (std::size_t p = 0; p < n; ++p) dst[p] = src[m[p]];
          continue;
        }
        const int dx = kx - r;
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        for (int y = band.y0; y < band.y1; ++y) {
          double* row = dst + static_cast<std::size_t>(y - band.y0) * w;
          const int sy = y + ky - r;
          if (sy < 0 || sy >= h || x0 >= x1) {
            std::fill(row, row + w, 0.0);
            continue;
          }
          std::fill(row, row + x0, 0.0);
          std::copy(src + sy * w + x0 + dx, src + sy * w + x1 + dx, row + x0);
          std::fill(row + x1, row + w, 0.0);
        }
      }
  }
}

void col2im_band_add(const double* cols, int channels, int h, int w, int k, const std::vector<int>& reflect,
                     RowBand band, double* dx_out) {
  const int r = k / 2;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  const std::size_t n = band.cols() * w;
  for (int ci = 0; ci < channels; ++ci) {
    double* dst = dx_out + ci * hw;
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const int tap = ky * k + kx;
        const double* src = cols + (static_cast<std::size_t>(ci) * k * k + tap) * n;
        if (!reflect.empty()) {
          const int* m = reflect.data() + tap * hw + static_cast<std::size_t>(band.y0) * w;
          for (std::size_t p = 0; p < n; ++p) dst[m[p]] += src[p];
          continue;
        }
        const int dx = kx - r;
        const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
        for (int y = band.y0; y < band.y1; ++y) {
          const int sy = y + ky - r;
          if (sy < 0 || sy >= h) continue;
          const double* row = src + static_cast<std::size_t>(y - band.y0) * w;
          double* d = dst + sy * w + dx;
          for (int x = x0; x < x1; ++x) d[x] += row[x];
        }
      }
  }
}

struct ConvGeometry {
  int batch, cin, cout, h, w, k, groups, cin_g, cout_g, kk;
  std::size_t hw, kdim;
  int band_rows;  // rows per im2col band, sized to stay cache resident
};

ConvGeometry check_conv(const Tensor& x, const Tensor& weight, int groups) {
  const Shape& xs = x.shape;
  const Shape& ws = weight.shape;
  if (groups < 1) throw std::invalid_argument("conv2d: groups must be >= 1");
  if (xs.c % groups != 0) throw std::invalid_argument("conv2d: input channels not divisible by groups");
  if (ws.n % groups != 0) throw std::invalid_argument("conv2d: output channels not divisible by groups");
  if (ws.c != xs.c / groups) throw std::invalid_argument("conv2d: weight " + to_string(ws) + " incompatible with input " + to_string(xs));
  if (ws.h != ws.w || ws.h % 2 == 0) throw std::invalid_argument("conv2d: kernel must be square and odd");
  ConvGeometry g{};
  g.batch = xs.n;
  g.cin = xs.c;
  g.cout = ws.n;
  g.h = xs.h;
  g.w = xs.w;
  g.k = ws.h;
  g.groups = groups;
  g.cin_g = xs.c / groups;
  g.cout_g = ws.n / groups;
  g.kk = g.k * g.k;
  g.hw = xs.plane();
  g.kdim = static_cast<std::size_t>(g.cin_g) * g.kk;
  constexpr std::size_t kBandDoubles = 32 * 1024;
  const std::size_t per_row = g.kdim * static_cast<std::size_t>(std::max(g.w, 1));
  g.band_rows = static_cast<int>(std::clamp<std::size_t>(kBandDoubles / std::max<std::size_t>(per_row, 1), 1,
                                                         static_cast<std::size_t>(std::max(g.h, 1))));
  return g;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor* bias, Padding padding, int groups) {
  const ConvGeometry g = check_conv(x, weight, groups);
  if (bias && bias->numel() != static_cast<std::size_t>(g.cout)) throw std::invalid_argument("conv2d: bias size mismatch");
  Tensor y(Shape{g.batch, g.cout, g.h, g.w});
  const auto reflect = padding == Padding::Reflect ? build_reflect_map(g.h, g.w, g.k) : std::vector<int>{};
  std::vector<double> cols(g.kdim * static_cast<std::size_t>(g.band_rows) * g.w);

  for (int n = 0; n < g.batch; ++n)
    for (int gi = 0; gi < g.groups; ++gi) {
      const double* src = x.sample(n) + static_cast<std::size_t>(gi) * g.cin_g * g.hw;
      ConstMatMap wg(weight.data.data() + static_cast<std::size_t>(gi) * g.cout_g * g.kdim, g.cout_g, g.kdim);
      MatMap out(y.sample(n) + static_cast<std::size_t>(gi) * g.cout_g * g.hw, g.cout_g, g.hw);
      for (int y0 = 0; y0 < g.h; y0 += g.band_rows) {
        const RowBand band{y0, std::min(g.h, y0 + g.band_rows)};
        const auto n_cols = static_cast<Eigen::Index>(band.cols() * g.w);
        im2col_band(src, g.cin_g, g.h, g.w, g.k, reflect, band, cols.data());
        ConstMatMap cm(cols.data(), g.kdim, n_cols);
        out.middleCols(static_cast<Eigen::Index>(y0) * g.w, n_cols).noalias() = wg * cm;
      }
      if (bias)
        for (int o = 0; o < g.cout_g; ++o) out.row(o).array() += bias->data[static_cast<std::size_t>(gi) * g.cout_g + o];
    }
  return y;
}

void conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, Padding padding, int groups,
                     Tensor* grad_x, Tensor* grad_weight, Tensor* grad_bias) {
  const ConvGeometry g = check_conv(x, weight, groups);
  if (!(grad_out.shape == Shape{g.batch, g.cout, g.h, g.w})) throw std::invalid_argument("conv2d_backward: grad shape mismatch");
  if (grad_weight && !(grad_weight->shape == weight.shape)) throw std::invalid_argument("conv2d_backward: weight grad shape");
  const auto reflect = padding == Padding::Reflect ? build_reflect_map(g.h, g.w, g.k) : std::vector<int>{};
  if (grad_x) *grad_x = Tensor(x.shape);

  const std::size_t band_size = g.kdim * static_cast<std::size_t>(g.band_rows) * g.w;
  std::vector<double> cols(band_size), dcols(band_size);
  for (int n = 0; n < g.batch; ++n)
    for (int gi = 0; gi < g.groups; ++gi) {
      const double* src = x.sample(n) + static_cast<std::size_t>(gi) * g.cin_g * g.hw;
      ConstMatMap wg(weight.data.data() + static_cast<std::size_t>(gi) * g.cout_g * g.kdim, g.cout_g, g.kdim);
      ConstMatMap dy(grad_out.sample(n) + static_cast<std::size_t>(gi) * g.cout_g * g.hw, g.cout_g, g.hw);
      if (grad_bias)
        for (int o = 0; o < g.cout_g; ++o) grad_bias->data[static_cast<std::size_t>(gi) * g.cout_g + o] += dy.row(o).sum();
      for (int y0 = 0; y0 < g.h; y0 += g.band_rows) {
        const RowBand band{y0, std::min(g.h, y0 + g.band_rows)};
        const auto n_cols = static_cast<Eigen::Index>(band.cols() * g.w);
        const auto dy_band = dy.middleCols(static_cast<Eigen::Index>(y0) * g.w, n_cols);
        if (grad_weight) {
          im2col_band(src, g.cin_g, g.h, g.w, g.k, reflect, band, cols.data());
          ConstMatMap cm(cols.data(), g.kdim, n_cols);
          MatMap dw(grad_weight->data.data() + static_cast<std::size_t>(gi) * g.cout_g * g.kdim, g.cout_g, g.kdim);
          dw.noalias() += dy_band * cm.transpose();
        }
        if (grad_x) {
          MatMap dc(dcols.data(), g.kdim, n_cols);
          dc.noalias() = wg.transpose() * dy_band;
          col2im_band_add(dcols.data(), g.cin_g, g.h, g.w, g.k, reflect, band,
                          grad_x->sample(n) + static_cast<std::size_t>(gi) * g.cin_g * g.hw);
        }
      }
    }
}

Tensor relu(const Tensor& x) {
  Tensor y(x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  if (!(x.shape == grad_out.shape)) throw std::invalid_argument("relu_backward: shape mismatch");
  Tensor g(x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) g.data[i] = x.data[i] > 0.0 ? grad_out.data[i] : 0.0;
  return g;
}

Tensor sigmoid(const Tensor& x) {
  Tensor y(x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double v = x.data[i];
    // Branch keeps exp() from overflowing for large |v|.
    if (v >= 0.0) {
      y.data[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      y.data[i] = e / (1.0 + e);
    }
  }
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out) {
  if (!(y.shape == grad_out.shape)) throw std::invalid_argument("sigmoid_backward: shape mismatch");
  Tensor g(y.shape);
  for (std::size_t i = 0; i < y.data.size(); ++i) g.data[i] = grad_out.data[i] * y.data[i] * (1.0 - y.data[i]);
  return g;
}

Tensor fully_connected(const Tensor& x, const Tensor& weight, const Tensor* bias) {
  const int batch = x.shape.n;
  const std::size_t in = x.numel() / std::max(batch, 1);
  const int out = weight.shape.n;
  if (weight.numel() != static_cast<std::size_t>(out) * in)
    throw std::invalid_argument("fully_connected: weight " + to_string(weight.shape) + " vs input " + to_string(x.shape));
  if (bias && bias->numel() != static_cast<std::size_t>(out)) throw std::invalid_argument("fully_connected: bias size");
  Tensor y(Shape{batch, out, 1, 1});
  ConstMatMap xm(x.data.data(), batch, in);
  ConstMatMap wm(weight.data.data(), out, in);
  MatMap ym(y.data.data(), batch, out);
  ym.noalias() = xm * wm.transpose();
  if (bias)
    for (int b = 0; b < batch; ++b)
      for (int o = 0; o < out; ++o) ym(b, o) += bias->data[o];
  return y;
}

void fully_connected_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, Tensor* grad_x,
                              Tensor* grad_weight, Tensor* grad_bias) {
  const int batch = x.shape.n;
  const std::size_t in = x.numel() / std::max(batch, 1);
  const int out = weight.shape.n;
  if (grad_out.numel() != static_cast<std::size_t>(batch) * out) throw std::invalid_argument("fully_connected_backward: grad size");
  ConstMatMap xm(x.data.data(), batch, in);
  ConstMatMap wm(weight.data.data(), out, in);
  ConstMatMap dy(grad_out.data.data(), batch, out);
  if (grad_weight) {
    MatMap dw(grad_weight->data.data(), out, in);
    dw.noalias() += dy.transpose() * xm;
  }
  if (grad_bias)
    for (int o = 0; o < out; ++o) grad_bias->data[o] += dy.col(o).sum();
  if (grad_x) {
    *grad_x = Tensor(x.shape);
    MatMap dx(grad_x->data.data(), batch, in);
    dx.noalias() = dy * wm;
  }
}

Tensor avg_pool(const Tensor& x, int k) {
  if (k < 1 || x.shape.h % k != 0 || x.shape.w % k != 0) throw std::invalid_argument("avg_pool: H and W must be divisible by k");
  const Shape s = x.shape;
  Tensor y(Shape{s.n, s.c, s.h / k, s.w / k});
  const double inv = 1.0 / (k * k);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int oy = 0; oy < s.h / k; ++oy)
        for (int ox = 0; ox < s.w / k; ++ox) {
          double acc = 0.0;
          for (int dy = 0; dy < k; ++dy)
            for (int dx = 0; dx < k; ++dx) acc += x.at(n, c, oy * k + dy, ox * k + dx);
          y.at(n, c, oy, ox) = acc * inv;
        }
  return y;
}

Tensor avg_pool_backward(const Shape& input_shape, const Tensor& grad_out, int k) {
  Tensor g(input_shape);
  const double inv = 1.0 / (k * k);
  for (int n = 0; n < input_shape.n; ++n)
    for (int c = 0; c < input_shape.c; ++c)
      for (int y = 0; y < input_shape.h; ++y)
        for (int x = 0; x < input_shape.w; ++x) g.at(n, c, y, x) = grad_out.at(n, c, y / k, x / k) * inv;
  return g;
}

Tensor global_avg_pool(const Tensor& x) {
  const Shape s = x.shape;
  Tensor y(Shape{s.n, s.c, 1, 1});
  const std::size_t hw = s.plane();
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const double* p = x.data.data() + (static_cast<std::size_t>(n) * s.c + c) * hw;
      double acc = 0.0;
      for (std::size_t i = 0; i < hw; ++i) acc += p[i];
      y.at(n, c, 0, 0) = acc / static_cast<double>(hw);
    }
  return y;
}

Tensor global_avg_pool_backward(const Shape& input_shape, const Tensor& grad_out) {
  Tensor g(input_shape);
  const std::size_t hw = input_shape.plane();
  for (int n = 0; n < input_shape.n; ++n)
    for (int c = 0; c < input_shape.c; ++c) {
      const double v = grad_out.at(n, c, 0, 0) / static_cast<double>(hw);
      double* p = g.data.data() + (static_cast<std::size_t>(n) * input_shape.c + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) p[i] = v;
    }
  return g;
}

Tensor pixel_shuffle(const Tensor& x, int s) {
  if (s < 1 || x.shape.c % (s * s) != 0) throw std::invalid_argument("pixel_shuffle: channels not divisible by s^2");
  if (s == 1) return x;
  const Shape in = x.shape;
  const int c_out = in.c / (s * s);
  Tensor y(Shape{in.n, c_out, in.h * s, in.w * s});
  for (int n = 0; n < in.n; ++n)
    for (int c = 0; c < c_out; ++c)
      for (int dy = 0; dy < s; ++dy)
        for (int dx = 0; dx < s; ++dx) {
          const int ci = c * s * s + dy * s + dx;
          for (int h = 0; h < in.h; ++h)
            for (int w = 0; w < in.w; ++w) y.at(n, c, s * h + dy, s * w + dx) = x.at(n, ci, h, w);
        }
  return y;
}

Tensor pixel_shuffle_backward(const Tensor& grad_out, int s) {
  if (s == 1) return grad_out;
  const Shape out = grad_out.shape;
  if (out.h % s != 0 || out.w % s != 0) throw std::invalid_argument("pixel_shuffle_backward: bad grad shape");
  Tensor g(Shape{out.n, out.c * s * s, out.h / s, out.w / s});
  for (int n = 0; n < out.n; ++n)
    for (int c = 0; c < out.c; ++c)
      for (int dy = 0; dy < s; ++dy)
        for (int dx = 0; dx < s; ++dx) {
          const int ci = c * s * s + dy * s + dx;
          for (int h = 0; h < out.h / s; ++h)
            for (int w = 0; w < out.w / s; ++w) g.at(n, ci, h, w) = grad_out.at(n, c, s * h + dy, s * w + dx);
        }
  return g;
}

Loss l1_loss(const Tensor& pred, const Tensor& target) {
  if (!(pred.shape == target.shape)) throw std::invalid_argument("l1_loss: shape mismatch");
  Loss loss;
  loss.grad = Tensor(pred.shape);
  const double inv = 1.0 / static_cast<double>(pred.numel());
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - target.data[i];
    acc += std::abs(d);
    loss.grad.data[i] = d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0);
  }
  loss.value = acc * inv;
  return loss;
}

}  // namespace tlsr::nn
