// src/ops.cc

// Copyright 2026  LIDKit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "lidkit/ops.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "lidkit/errors.h"

namespace lidkit {

namespace {

bool want_grad(Tape *tape, std::initializer_list<const Tensor *> inputs) {
  if (tape == nullptr) return false;
  for (const Tensor *t : inputs) {
    if (t->defined() && t->needs_grad()) return true;
  }
  return false;
}

index_t floor_div(index_t a, index_t b) {
  return a >= 0 ? a / b : -((-a + b - 1) / b);
}

index_t ceil_div(index_t a, index_t b) {
  return a > 0 ? (a + b - 1) / b : -(-a / b);
}

void check_same_shape(const Tensor &a, const Tensor &b, const char *op) {
  if (a.shape() != b.shape()) {
    throw DataError(std::string(op) + ": shape mismatch " + a.shape_str() +
                    " vs " + b.shape_str());
  }
}

}  // namespace

void ConvSpec::validate() const {
  if (stride != 1 && stride != 2) {
    throw DataError("ConvSpec: stride must be 1 or 2, got " + std::to_string(stride));
  }
  bool ok = (kernel == 3 && padding == 1) || (kernel == 1 && padding == 0);
  if (!ok) {
    throw DataError("ConvSpec: only 3x3/pad-1 and 1x1/pad-0 kernels are supported");
  }
  if (in_channels <= 0 || out_channels <= 0) {
    throw DataError("ConvSpec: channel counts must be positive");
  }
}

BatchNormState BatchNormState::make(index_t channels) {
  BatchNormState s;
  s.gamma = Tensor::full({channels}, 1.0);
  s.beta = Tensor::zeros({channels});
  s.running_mean = Tensor::zeros({channels});
  s.running_var = Tensor::full({channels}, 1.0);
  return s;
}

Tensor conv2d(Tape *tape, const Tensor &input, const ConvSpec &spec,
              const Tensor &weight, const Tensor &bias) {
  spec.validate();
  if (input.rank() != 3 && input.rank() != 4) {
    throw DataError("conv2d: input must be (C,H,W) or (N,C,H,W), got " +
                    input.shape_str());
  }
  const bool batched = input.rank() == 4;
  const index_t N = batched ? input.dim(0) : 1;
  const index_t Ci = input.dim(batched ? 1 : 0);
  const index_t H = input.dim(batched ? 2 : 1);
  const index_t W = input.dim(batched ? 3 : 2);
  if (weight.rank() != 4 || weight.dim(0) != spec.out_channels ||
      weight.dim(1) != spec.in_channels || weight.dim(2) != spec.kernel ||
      weight.dim(3) != spec.kernel) {
    throw DataError("conv2d: weight shape " + weight.shape_str() +
                    " does not match spec (Cout=" + std::to_string(spec.out_channels) +
                    ", Cin=" + std::to_string(spec.in_channels) +
                    ", k=" + std::to_string(spec.kernel) + ")");
  }
  if (Ci != spec.in_channels) {
    throw DataError("conv2d: input has " + std::to_string(Ci) +
                    " channels, spec expects " + std::to_string(spec.in_channels) +
                    " (input " + input.shape_str() + ", weight " + weight.shape_str() + ")");
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != spec.out_channels)) {
    throw DataError("conv2d: bias shape " + bias.shape_str() + " must be (" +
                    std::to_string(spec.out_channels) + ")");
  }
  const index_t Co = spec.out_channels;
  const int k = spec.kernel, p = spec.padding, s = spec.stride;
  const index_t Ho = spec.out_extent(H);
  const index_t Wo = spec.out_extent(W);
  if (Ho < 1 || Wo < 1) {
    throw DataError("conv2d: input spatial extents too small: " + input.shape_str());
  }

  Tensor out = batched ? Tensor::zeros({N, Co, Ho, Wo}) : Tensor::zeros({Co, Ho, Wo});
  const double *xd = input.data();
  const double *wd = weight.data();
  const double *bd = bias.defined() ? bias.data() : nullptr;
  double *od = out.data();

#pragma omp parallel for schedule(static) if (N * Co > 1)
  for (index_t nco = 0; nco < N * Co; ++nco) {
    const index_t n = nco / Co, co = nco % Co;
    double *out_nc = od + (n * Co + co) * Ho * Wo;
    const double bv = bd ? bd[co] : 0.0;
    for (index_t i = 0; i < Ho * Wo; ++i) out_nc[i] = bv;
    for (index_t ci = 0; ci < Ci; ++ci) {
      const double *x_nc = xd + (n * Ci + ci) * H * W;
      const double *w_cc = wd + (co * Ci + ci) * k * k;
      for (int kh = 0; kh < k; ++kh) {
        const index_t hp_lo = std::max<index_t>(0, ceil_div(p - kh, s));
        const index_t hp_hi = std::min<index_t>(Ho - 1, floor_div(H - 1 + p - kh, s));
        for (int kw = 0; kw < k; ++kw) {
          const double wv = w_cc[kh * k + kw];
          const index_t wp_lo = std::max<index_t>(0, ceil_div(p - kw, s));
          const index_t wp_hi = std::min<index_t>(Wo - 1, floor_div(W - 1 + p - kw, s));
          for (index_t hp = hp_lo; hp <= hp_hi; ++hp) {
            const double *xrow = x_nc + (hp * s + kh - p) * W;
            double *orow = out_nc + hp * Wo;
            for (index_t wp = wp_lo; wp <= wp_hi; ++wp) {
              orow[wp] += wv * xrow[wp * s + kw - p];
            }
          }
        }
      }
    }
  }

  if (want_grad(tape, {&input, &weight, &bias})) {
    out.mark_needs_grad();
    Tensor in_c = input, w_c = weight, b_c = bias, out_c = out;
    tape->record({in_c, w_c, b_c, out_c}, [=]() mutable {
      if (!out_c.has_grad()) return;
      const double *g = out_c.grad_data();
      const double *xv = in_c.data();
      const double *wv = w_c.data();
      if (in_c.needs_grad()) {
        double *gx = in_c.grad();
#pragma omp parallel for schedule(static) if (N * Ci > 1)
        for (index_t nci = 0; nci < N * Ci; ++nci) {
          const index_t n = nci / Ci, ci = nci % Ci;
          double *gx_nc = gx + (n * Ci + ci) * H * W;
          for (index_t co = 0; co < Co; ++co) {
            const double *g_nc = g + (n * Co + co) * Ho * Wo;
            const double *w_cc = wv + (co * Ci + ci) * k * k;
            for (int kh = 0; kh < k; ++kh) {
              for (int kw = 0; kw < k; ++kw) {
                const double wgt = w_cc[kh * k + kw];
                for (index_t h = 0; h < H; ++h) {
                  const index_t th = h + p - kh;
                  if (th < 0 || th % s != 0) continue;
                  const index_t hp = th / s;
                  if (hp >= Ho) continue;
                  const double *grow = g_nc + hp * Wo;
                  double *gxrow = gx_nc + h * W;
                  for (index_t w = ((kw - p) % s + s) % s; w < W; w += s) {
                    const index_t tw = w + p - kw;
                    if (tw < 0) continue;
                    const index_t wp = tw / s;
                    if (wp >= Wo) break;
                    gxrow[w] += wgt * grow[wp];
                  }
                }
              }
            }
          }
        }
      }
      if (w_c.needs_grad()) {
        double *gw = w_c.grad();
#pragma omp parallel for schedule(static) if (Co * Ci > 1)
        for (index_t cc = 0; cc < Co * Ci; ++cc) {
          const index_t co = cc / Ci, ci = cc % Ci;
          for (int kh = 0; kh < k; ++kh) {
            for (int kw = 0; kw < k; ++kw) {
              double acc = 0.0;
              for (index_t n = 0; n < N; ++n) {
                const double *g_nc = g + (n * Co + co) * Ho * Wo;
                const double *x_nc = xv + (n * Ci + ci) * H * W;
                const index_t hp_lo = std::max<index_t>(0, ceil_div(p - kh, s));
                const index_t hp_hi = std::min<index_t>(Ho - 1, floor_div(H - 1 + p - kh, s));
                const index_t wp_lo = std::max<index_t>(0, ceil_div(p - kw, s));
                const index_t wp_hi = std::min<index_t>(Wo - 1, floor_div(W - 1 + p - kw, s));
                for (index_t hp = hp_lo; hp <= hp_hi; ++hp) {
                  const double *xrow = x_nc + (hp * s + kh - p) * W;
                  const double *grow = g_nc + hp * Wo;
                  for (index_t wp = wp_lo; wp <= wp_hi; ++wp) {
                    acc += grow[wp] * xrow[wp * s + kw - p];
                  }
                }
              }
              gw[(cc * k + kh) * k + kw] += acc;
            }
          }
        }
      }
      if (b_c.defined() && b_c.needs_grad()) {
        double *gb = b_c.grad();
        for (index_t co = 0; co < Co; ++co) {
          double acc = 0.0;
          for (index_t n = 0; n < N; ++n) {
            const double *g_nc = g + (n * Co + co) * Ho * Wo;
            for (index_t i = 0; i < Ho * Wo; ++i) acc += g_nc[i];
          }
          gb[co] += acc;
        }
      }
    });
  }
  return out;
}

Tensor affine(Tape *tape, const Tensor &input, const Tensor &weight,
              const Tensor &bias) {
  if (input.rank() < 1 || weight.rank() != 2) {
    throw DataError("affine: input " + input.shape_str() + ", weight " +
                    weight.shape_str() + " have unsupported ranks");
  }
  const index_t n = input.dim(input.rank() - 1);
  const index_t m = weight.dim(0);
  if (weight.dim(1) != n) {
    throw DataError("affine: trailing input extent " + std::to_string(n) +
                    " does not match weight " + weight.shape_str());
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != m)) {
    throw DataError("affine: bias shape " + bias.shape_str() + " must be (" +
                    std::to_string(m) + ")");
  }
  const index_t rows = input.numel() / n;
  std::vector<index_t> out_shape = input.shape();
  out_shape.back() = m;
  Tensor out = Tensor::zeros(out_shape);

  const double *xd = input.data();
  const double *wd = weight.data();
  const double *bd = bias.defined() ? bias.data() : nullptr;
  double *od = out.data();
#pragma omp parallel for schedule(static) if (rows > 1)
  for (index_t r = 0; r < rows; ++r) {
    const double *xr = xd + r * n;
    double *orow = od + r * m;
    for (index_t j = 0; j < m; ++j) {
      const double *wj = wd + j * n;
      double acc = bd ? bd[j] : 0.0;
      for (index_t kk = 0; kk < n; ++kk) acc += wj[kk] * xr[kk];
      orow[j] = acc;
    }
  }

  if (want_grad(tape, {&input, &weight, &bias})) {
    out.mark_needs_grad();
    Tensor in_c = input, w_c = weight, b_c = bias, out_c = out;
    tape->record({in_c, w_c, b_c, out_c}, [=]() mutable {
      if (!out_c.has_grad()) return;
      const double *g = out_c.grad_data();
      if (in_c.needs_grad()) {
        double *gx = in_c.grad();
        const double *wv = w_c.data();
#pragma omp parallel for schedule(static) if (rows > 1)
        for (index_t r = 0; r < rows; ++r) {
          const double *grow = g + r * m;
          double *gxr = gx + r * n;
          for (index_t j = 0; j < m; ++j) {
            const double gv = grow[j];
            const double *wj = wv + j * n;
            for (index_t kk = 0; kk < n; ++kk) gxr[kk] += gv * wj[kk];
          }
        }
      }
      if (w_c.needs_grad()) {
        double *gw = w_c.grad();
        const double *xv = in_c.data();
#pragma omp parallel for schedule(static) if (m > 1)
        for (index_t j = 0; j < m; ++j) {
          double *gwj = gw + j * n;
          for (index_t r = 0; r < rows; ++r) {
            const double gv = g[r * m + j];
            const double *xr = xv + r * n;
            for (index_t kk = 0; kk < n; ++kk) gwj[kk] += gv * xr[kk];
          }
        }
      }
      if (b_c.defined() && b_c.needs_grad()) {
        double *gb = b_c.grad();
        for (index_t j = 0; j < m; ++j) {
          double acc = 0.0;
          for (index_t r = 0; r < rows; ++r) acc += g[r * m + j];
          gb[j] += acc;
        }
      }
    });
  }
  return out;
}

Tensor elementwise(Tape *tape, const Tensor &input, Activation kind) {
  Tensor out = Tensor::zeros(input.shape());
  const index_t n = input.numel();
  const double *xd = input.data();
  double *od = out.data();
  switch (kind) {
    case Activation::kTanh:
      for (index_t i = 0; i < n; ++i) od[i] = std::tanh(xd[i]);
      break;
    case Activation::kRelu:
      for (index_t i = 0; i < n; ++i) od[i] = xd[i] > 0.0 ? xd[i] : 0.0;
      break;
    case Activation::kSigmoid:
      for (index_t i = 0; i < n; ++i) od[i] = 1.0 / (1.0 + std::exp(-xd[i]));
      break;
  }
  if (want_grad(tape, {&input})) {
    out.mark_needs_grad();
    Tensor in_c = input, out_c = out;
    tape->record({in_c, out_c}, [=]() mutable {
      if (!out_c.has_grad() || !in_c.needs_grad()) return;
      const double *g = out_c.grad_data();
      const double *y = out_c.data();
      const double *x = in_c.data();
      double *gx = in_c.grad();
      switch (kind) {
        case Activation::kTanh:
          for (index_t i = 0; i < n; ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
          break;
        case Activation::kRelu:
          for (index_t i = 0; i < n; ++i) gx[i] += x[i] > 0.0 ? g[i] : 0.0;
          break;
        case Activation::kSigmoid:
          for (index_t i = 0; i < n; ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
          break;
      }
    });
  }
  return out;
}

namespace {

// Shared row-wise softmax core over a contiguous (rows, cols) view.
void softmax_forward_rows(const double *x, double *y, index_t rows, index_t cols) {
  for (index_t r = 0; r < rows; ++r) {
    const double *xr = x + r * cols;
    double *yr = y + r * cols;
    double mx = xr[0];
    for (index_t j = 1; j < cols; ++j) mx = std::max(mx, xr[j]);
    double s = 0.0;
    for (index_t j = 0; j < cols; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      s += yr[j];
    }
    const double inv = 1.0 / s;
    for (index_t j = 0; j < cols; ++j) yr[j] *= inv;
  }
}

Tensor softmax_impl(Tape *tape, const Tensor &input, index_t rows, index_t cols) {
  Tensor out = Tensor::zeros(input.shape());
  softmax_forward_rows(input.data(), out.data(), rows, cols);
  if (want_grad(tape, {&input})) {
    out.mark_needs_grad();
    Tensor in_c = input, out_c = out;
    tape->record({in_c, out_c}, [=]() mutable {
      if (!out_c.has_grad() || !in_c.needs_grad()) return;
      const double *g = out_c.grad_data();
      const double *y = out_c.data();
      double *gx = in_c.grad();
      for (index_t r = 0; r < rows; ++r) {
        const double *gr = g + r * cols;
        const double *yr = y + r * cols;
        double dot = 0.0;
        for (index_t j = 0; j < cols; ++j) dot += gr[j] * yr[j];
        double *gxr = gx + r * cols;
        for (index_t j = 0; j < cols; ++j) gxr[j] += yr[j] * (gr[j] - dot);
      }
    });
  }
  return out;
}

}  // namespace

Tensor softmax(Tape *tape, const Tensor &input) {
  if (input.rank() != 1 || input.dim(0) < 1) {
    throw DataError("softmax: expects a length-n vector, got " + input.shape_str());
  }
  return softmax_impl(tape, input, 1, input.dim(0));
}

Tensor softmax_rows(Tape *tape, const Tensor &input) {
  if (input.rank() != 2) {
    throw DataError("softmax_rows: expects (R,C), got " + input.shape_str());
  }
  return softmax_impl(tape, input, input.dim(0), input.dim(1));
}

Tensor log_softmax_rows(Tape *tape, const Tensor &input) {
  if (input.rank() != 2) {
    throw DataError("log_softmax_rows: expects (R,C), got " + input.shape_str());
  }
  const index_t rows = input.dim(0), cols = input.dim(1);
  Tensor out = Tensor::zeros(input.shape());
  const double *xd = input.data();
  double *od = out.data();
  for (index_t r = 0; r < rows; ++r) {
    const double *xr = xd + r * cols;
    double *yr = od + r * cols;
    double mx = xr[0];
    for (index_t j = 1; j < cols; ++j) mx = std::max(mx, xr[j]);
    double s = 0.0;
    for (index_t j = 0; j < cols; ++j) s += std::exp(xr[j] - mx);
    const double lse = mx + std::log(s);
    for (index_t j = 0; j < cols; ++j) yr[j] = xr[j] - lse;
  }
  if (want_grad(tape, {&input})) {
    out.mark_needs_grad();
    Tensor in_c = input, out_c = out;
    tape->record({in_c, out_c}, [=]() mutable {
      if (!out_c.has_grad() || !in_c.needs_grad()) return;
      const double *g = out_c.grad_data();
      const double *y = out_c.data();
      double *gx = in_c.grad();
      for (index_t r = 0; r < rows; ++r) {
        double sg = 0.0;
        for (index_t j = 0; j < cols; ++j) sg += g[r * cols + j];
        for (index_t j = 0; j < cols; ++j) {
          gx[r * cols + j] += g[r * cols + j] - std::exp(y[r * cols + j]) * sg;
        }
      }
    });
  }
  return out;
}

Tensor batch_norm(Tape *tape, const Tensor &input, BatchNormState &state,
                  bool training) {
  if (input.rank() != 4) {
    throw DataError("batch_norm: expects (N,C,H,W), got " + input.shape_str());
  }
  const index_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  if (state.gamma.dim(0) != C) {
    throw DataError("batch_norm: state has " + state.gamma.shape_str() +
                    " channels, input " + input.shape_str());
  }
  const index_t plane = H * W;
  const index_t m = N * plane;
  const double eps = state.epsilon;
  Tensor out = Tensor::zeros(input.shape());
  const double *xd = input.data();
  double *od = out.data();
  const double *gam = state.gamma.data();
  const double *bet = state.beta.data();

  auto channel_ptr = [&](const double *base, index_t n, index_t c) {
    return base + (n * C + c) * plane;
  };

  if (training) {
    if (m < 2) {
      throw DataError("batch_norm: training mode needs N*H*W >= 2 per channel, got " +
                      std::to_string(m));
    }
    auto mean_v = std::make_shared<std::vector<double>>(C);
    auto invstd_v = std::make_shared<std::vector<double>>(C);
    double *rm = state.running_mean.data();
    double *rv = state.running_var.data();
    const double mom = state.momentum;
#pragma omp parallel for schedule(static) if (C > 1)
    for (index_t c = 0; c < C; ++c) {
      double sum = 0.0;
      for (index_t n = 0; n < N; ++n) {
        const double *xp = channel_ptr(xd, n, c);
        for (index_t i = 0; i < plane; ++i) sum += xp[i];
      }
      const double mean = sum / static_cast<double>(m);
      double var = 0.0;
      for (index_t n = 0; n < N; ++n) {
        const double *xp = channel_ptr(xd, n, c);
        for (index_t i = 0; i < plane; ++i) {
          const double d = xp[i] - mean;
          var += d * d;
        }
      }
      var /= static_cast<double>(m);
      const double invstd = 1.0 / std::sqrt(var + eps);
      (*mean_v)[c] = mean;
      (*invstd_v)[c] = invstd;
      for (index_t n = 0; n < N; ++n) {
        const double *xp = channel_ptr(xd, n, c);
        double *op = od + (n * C + c) * plane;
        for (index_t i = 0; i < plane; ++i) {
          op[i] = gam[c] * (xp[i] - mean) * invstd + bet[c];
        }
      }
      rm[c] = (1.0 - mom) * rm[c] + mom * mean;
      const double unbiased = var * static_cast<double>(m) / static_cast<double>(m - 1);
      rv[c] = (1.0 - mom) * rv[c] + mom * unbiased;
    }
    if (want_grad(tape, {&input, &state.gamma, &state.beta})) {
      out.mark_needs_grad();
      Tensor in_c = input, gam_c = state.gamma, bet_c = state.beta, out_c = out;
      tape->record({in_c, gam_c, bet_c, out_c}, [=]() mutable {
        if (!out_c.has_grad()) return;
        const double *g = out_c.grad_data();
        const double *xv = in_c.data();
        const double *gmv = gam_c.data();
        double *gx = in_c.needs_grad() ? in_c.grad() : nullptr;
        double *gg = gam_c.needs_grad() ? gam_c.grad() : nullptr;
        double *gb = bet_c.needs_grad() ? bet_c.grad() : nullptr;
#pragma omp parallel for schedule(static) if (C > 1)
        for (index_t c = 0; c < C; ++c) {
          const double mean = (*mean_v)[c];
          const double invstd = (*invstd_v)[c];
          double sg = 0.0, sgx = 0.0;
          for (index_t n = 0; n < N; ++n) {
            const double *gp = g + (n * C + c) * plane;
            const double *xp = xv + (n * C + c) * plane;
            for (index_t i = 0; i < plane; ++i) {
              sg += gp[i];
              sgx += gp[i] * (xp[i] - mean) * invstd;
            }
          }
          if (gg) gg[c] += sgx;
          if (gb) gb[c] += sg;
          if (gx) {
            const double a = gmv[c] * invstd;
            const double inv_m = 1.0 / static_cast<double>(m);
            for (index_t n = 0; n < N; ++n) {
              const double *gp = g + (n * C + c) * plane;
              const double *xp = xv + (n * C + c) * plane;
              double *gxp = gx + (n * C + c) * plane;
              for (index_t i = 0; i < plane; ++i) {
                const double xhat = (xp[i] - mean) * invstd;
                gxp[i] += a * (gp[i] - inv_m * sg - xhat * inv_m * sgx);
              }
            }
          }
        }
      });
    }
  } else {
    const double *rm = state.running_mean.data();
    const double *rv = state.running_var.data();
#pragma omp parallel for schedule(static) if (C > 1)
    for (index_t c = 0; c < C; ++c) {
      const double invstd = 1.0 / std::sqrt(rv[c] + eps);
      for (index_t n = 0; n < N; ++n) {
        const double *xp = channel_ptr(xd, n, c);
        double *op = od + (n * C + c) * plane;
        for (index_t i = 0; i < plane; ++i) {
          op[i] = gam[c] * (xp[i] - rm[c]) * invstd + bet[c];
        }
      }
    }
    if (want_grad(tape, {&input, &state.gamma, &state.beta})) {
      out.mark_needs_grad();
      Tensor in_c = input, gam_c = state.gamma, bet_c = state.beta, out_c = out;
      Tensor rm_c = state.running_mean, rv_c = state.running_var;
      tape->record({in_c, gam_c, bet_c, out_c, rm_c, rv_c}, [=]() mutable {
        if (!out_c.has_grad()) return;
        const double *g = out_c.grad_data();
        const double *xv = in_c.data();
        const double *gmv = gam_c.data();
        const double *rmv = rm_c.data();
        const double *rvv = rv_c.data();
        for (index_t c = 0; c < C; ++c) {
          const double invstd = 1.0 / std::sqrt(rvv[c] + eps);
          double sg = 0.0, sgx = 0.0;
          for (index_t n = 0; n < N; ++n) {
            const double *gp = g + (n * C + c) * plane;
            const double *xp = xv + (n * C + c) * plane;
            for (index_t i = 0; i < plane; ++i) {
              sg += gp[i];
              sgx += gp[i] * (xp[i] - rmv[c]) * invstd;
            }
          }
          if (gam_c.needs_grad()) gam_c.grad()[c] += sgx;
          if (bet_c.needs_grad()) bet_c.grad()[c] += sg;
          if (in_c.needs_grad()) {
            double *gx = in_c.grad();
            const double a = gmv[c] * invstd;
            for (index_t n = 0; n < N; ++n) {
              const double *gp = g + (n * C + c) * plane;
              double *gxp = gx + (n * C + c) * plane;
              for (index_t i = 0; i < plane; ++i) gxp[i] += a * gp[i];
            }
          }
        }
      });
    }
  }
  return out;
}

Tensor add(Tape *tape, const Tensor &a, const Tensor &b) {
  check_same_shape(a, b, "add");
  Tensor out = Tensor::zeros(a.shape());
  const index_t n = a.numel();
  const double *ad = a.data(), *bd = b.data();
  double *od = out.data();
  for (index_t i = 0; i < n; ++i) od[i] = ad[i] + bd[i];
  if (want_grad(tape, {&a, &b})) {
    out.mark_needs_grad();
    Tensor a_c = a, b_c = b, out_c = out;
    tape->record({a_c, b_c, out_c}, [=]() mutable {
      if (!out_c.has_grad()) return;
      const double *g = out_c.grad_data();
      if (a_c.needs_grad()) {
        double *ga = a_c.grad();
        for (index_t i = 0; i < n; ++i) ga[i] += g[i];
      }
      if (b_c.needs_grad()) {
        double *gb = b_c.grad();
        for (index_t i = 0; i < n; ++i) gb[i] += g[i];
      }
    });
  }
  return out;
}

Tensor mul(Tape *tape, const Tensor &a, const Tensor &b) {
  check_same_shape(a, b, "mul");
  Tensor out = Tensor::zeros(a.shape());
  const index_t n = a.numel();
  const double *ad = a.data(), *bd = b.data();
  double *od = out.data();
  for (index_t i = 0; i < n; ++i) od[i] = ad[i] * bd[i];
  if (want_grad(tape, {&a, &b})) {
    out.mark_needs_grad();
    Tensor a_c = a, b_c = b, out_c = out;
    tape->record({a_c, b_c, out_c}, [=]() mutable {
      if (!out_c.has_grad()) return;
      const double *g = out_c.grad_data();
      if (a_c.needs_grad()) {
        double *ga = a_c.grad();
        const double *bv = b_c.data();
        for (index_t i = 0; i < n; ++i) ga[i] += g[i] * bv[i];
      }
      if (b_c.needs_grad()) {
        double *gb = b_c.grad();
        const double *av = a_c.data();
        for (index_t i = 0; i < n; ++i) gb[i] += g[i] * av[i];
      }
    });
  }
  return out;
}

Tensor scale(Tape *tape, const Tensor &a, double factor) {
  Tensor out = Tensor::zeros(a.shape());
  const index_t n = a.numel();
  const double *ad = a.data();
  double *od = out.data();
  for (index_t i = 0; i < n; ++i) od[i] = factor * ad[i];
  if (want_grad(tape, {&a})) {
    out.mark_needs_grad();
    Tensor a_c = a, out_c = out;
    tape->record({a_c, out_c}, [=]() mutable {
      if (!out_c.has_grad() || !a_c.needs_grad()) return;
      const double *g = out_c.grad_data();
      double *ga = a_c.grad();
      for (index_t i = 0; i < n; ++i) ga[i] += factor * g[i];
    });
  }
  return out;
}

namespace {

Tensor reduce_all(Tape *tape, const Tensor &input, bool take_mean) {
  const index_t n = input.numel();
  const double *xd = input.data();
  double acc = 0.0;
  for (index_t i = 0; i < n; ++i) acc += xd[i];
  const double denom = take_mean ? static_cast<double>(n) : 1.0;
  Tensor out = Tensor::scalar(acc / denom);
  if (want_grad(tape, {&input})) {
    out.mark_needs_grad();
    Tensor in_c = input, out_c = out;
    tape->record({in_c, out_c}, [=]() mutable {
      if (!out_c.has_grad() || !in_c.needs_grad()) return;
      const double g = out_c.grad_data()[0] / denom;
      double *gx = in_c.grad();
      for (index_t i = 0; i < n; ++i) gx[i] += g;
    });
  }
  return out;
}

}  // namespace

Tensor sum(Tape *tape, const Tensor &input) { return reduce_all(tape, input, false); }

Tensor mean_all(Tape *tape, const Tensor &input) { return reduce_all(tape, input, true); }

Tensor mean_axis(Tape *tape, const Tensor &input, int axis) {
  if (axis < 0 || axis >= input.rank()) {
    throw DataError("mean_axis: axis " + std::to_string(axis) +
                    " out of range for " + input.shape_str());
  }
  const std::vector<index_t> &sh = input.shape();
  index_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= sh[static_cast<std::size_t>(i)];
  for (int i = axis + 1; i < input.rank(); ++i) inner *= sh[static_cast<std::size_t>(i)];
  const index_t n = sh[static_cast<std::size_t>(axis)];
  std::vector<index_t> out_shape;
  for (int i = 0; i < input.rank(); ++i) {
    if (i != axis) out_shape.push_back(sh[static_cast<std::size_t>(i)]);
  }
  if (out_shape.empty()) out_shape.push_back(1);
  Tensor out = Tensor::zeros(out_shape);
  const double *xd = input.data();
  double *od = out.data();
  const double inv_n = 1.0 / static_cast<double>(n);
#pragma omp parallel for schedule(static) if (outer > 1)
  for (index_t o = 0; o < outer; ++o) {
    const double *xo = xd + o * n * inner;
    double *oo = od + o * inner;
    for (index_t i = 0; i < inner; ++i) {
      double acc = 0.0;
      for (index_t kk = 0; kk < n; ++kk) acc += xo[kk * inner + i];
      oo[i] = acc * inv_n;
    }
  }
  if (want_grad(tape, {&input})) {
    out.mark_needs_grad();
    Tensor in_c = input, out_c = out;
    tape->record({in_c, out_c}, [=]() mutable {
      if (!out_c.has_grad() || !in_c.needs_grad()) return;
      const double *g = out_c.grad_data();
      double *gx = in_c.grad();
      for (index_t o = 0; o < outer; ++o) {
        for (index_t kk = 0; kk < n; ++kk) {
          for (index_t i = 0; i < inner; ++i) {
            gx[(o * n + kk) * inner + i] += g[o * inner + i] * inv_n;
          }
        }
      }
    });
  }
  return out;
}

Tensor slice_time(Tape *tape, const Tensor &input, index_t w) {
  if (input.rank() != 3) {
    throw DataError("slice_time: expects (N,C,W), got " + input.shape_str());
  }
  const index_t N = input.dim(0), C = input.dim(1), W = input.dim(2);
  if (w < 0 || w >= W) {
    throw DataError("slice_time: index " + std::to_string(w) + " out of range");
  }
  Tensor out = Tensor::zeros({N, C});
  const double *xd = input.data();
  double *od = out.data();
  for (index_t nn = 0; nn < N; ++nn) {
    for (index_t c = 0; c < C; ++c) od[nn * C + c] = xd[(nn * C + c) * W + w];
  }
  if (want_grad(tape, {&input})) {
    out.mark_needs_grad();
    Tensor in_c = input, out_c = out;
    tape->record({in_c, out_c}, [=]() mutable {
      if (!out_c.has_grad() || !in_c.needs_grad()) return;
      const double *g = out_c.grad_data();
      double *gx = in_c.grad();
      for (index_t nn = 0; nn < N; ++nn) {
        for (index_t c = 0; c < C; ++c) gx[(nn * C + c) * W + w] += g[nn * C + c];
      }
    });
  }
  return out;
}

Tensor slice_cols(Tape *tape, const Tensor &input, index_t c0, index_t c1) {
  if (input.rank() != 2 || c0 < 0 || c1 > input.dim(1) || c0 >= c1) {
    throw DataError("slice_cols: bad range [" + std::to_string(c0) + "," +
                    std::to_string(c1) + ") for " + input.shape_str());
  }
  const index_t R = input.dim(0), C = input.dim(1), M = c1 - c0;
  Tensor out = Tensor::zeros({R, M});
  const double *xd = input.data();
  double *od = out.data();
  for (index_t r = 0; r < R; ++r) {
    std::memcpy(od + r * M, xd + r * C + c0, static_cast<std::size_t>(M) * sizeof(double));
  }
  if (want_grad(tape, {&input})) {
    out.mark_needs_grad();
    Tensor in_c = input, out_c = out;
    tape->record({in_c, out_c}, [=]() mutable {
      if (!out_c.has_grad() || !in_c.needs_grad()) return;
      const double *g = out_c.grad_data();
      double *gx = in_c.grad();
      for (index_t r = 0; r < R; ++r) {
        for (index_t j = 0; j < M; ++j) gx[r * C + c0 + j] += g[r * M + j];
      }
    });
  }
  return out;
}

Tensor concat_cols(Tape *tape, const Tensor &a, const Tensor &b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) {
    throw DataError("concat_cols: incompatible shapes " + a.shape_str() + " and " +
                    b.shape_str());
  }
  const index_t R = a.dim(0), A = a.dim(1), B = b.dim(1);
  Tensor out = Tensor::zeros({R, A + B});
  const double *ad = a.data(), *bd = b.data();
  double *od = out.data();
  for (index_t r = 0; r < R; ++r) {
    std::memcpy(od + r * (A + B), ad + r * A, static_cast<std::size_t>(A) * sizeof(double));
    std::memcpy(od + r * (A + B) + A, bd + r * B, static_cast<std::size_t>(B) * sizeof(double));
  }
  if (want_grad(tape, {&a, &b})) {
    out.mark_needs_grad();
    Tensor a_c = a, b_c = b, out_c = out;
    tape->record({a_c, b_c, out_c}, [=]() mutable {
      if (!out_c.has_grad()) return;
      const double *g = out_c.grad_data();
      if (a_c.needs_grad()) {
        double *ga = a_c.grad();
        for (index_t r = 0; r < R; ++r) {
          for (index_t j = 0; j < A; ++j) ga[r * A + j] += g[r * (A + B) + j];
        }
      }
      if (b_c.needs_grad()) {
        double *gb = b_c.grad();
        for (index_t r = 0; r < R; ++r) {
          for (index_t j = 0; j < B; ++j) gb[r * B + j] += g[r * (A + B) + A + j];
        }
      }
    });
  }
  return out;
}

Tensor stack_steps(Tape *tape, const std::vector<Tensor> &steps) {
  if (steps.empty()) throw DataError("stack_steps: empty step list");
  const index_t N = steps[0].dim(0), F = steps[0].dim(1);
  const index_t T = static_cast<index_t>(steps.size());
  for (const Tensor &s : steps) check_same_shape(steps[0], s, "stack_steps");
  Tensor out = Tensor::zeros({N, T, F});
  double *od = out.data();
  for (index_t t = 0; t < T; ++t) {
    const double *sd = steps[static_cast<std::size_t>(t)].data();
    for (index_t nn = 0; nn < N; ++nn) {
      std::memcpy(od + (nn * T + t) * F, sd + nn * F,
                  static_cast<std::size_t>(F) * sizeof(double));
    }
  }
  bool any = false;
  for (const Tensor &s : steps) any = any || s.needs_grad();
  if (tape != nullptr && any) {
    out.mark_needs_grad();
    std::vector<Tensor> refs = steps;
    refs.push_back(out);
    Tensor out_c = out;
    std::vector<Tensor> steps_c = steps;
    tape->record(refs, [=]() mutable {
      if (!out_c.has_grad()) return;
      const double *g = out_c.grad_data();
      for (index_t t = 0; t < T; ++t) {
        Tensor &s = steps_c[static_cast<std::size_t>(t)];
        if (!s.needs_grad()) continue;
        double *gs = s.grad();
        for (index_t nn = 0; nn < N; ++nn) {
          for (index_t f = 0; f < F; ++f) gs[nn * F + f] += g[(nn * T + t) * F + f];
        }
      }
    });
  }
  return out;
}

Tensor reshape(Tape *tape, const Tensor &input, std::vector<index_t> shape) {
  if (Tensor::numel_of(shape) != input.numel()) {
    throw DataError("reshape: cannot view " + input.shape_str() + " as " +
                    Tensor::shape_str(shape));
  }
  Tensor out = Tensor::from(shape, std::vector<double>(input.data(), input.data() + input.numel()));
  if (want_grad(tape, {&input})) {
    out.mark_needs_grad();
    Tensor in_c = input, out_c = out;
    const index_t n = input.numel();
    tape->record({in_c, out_c}, [=]() mutable {
      if (!out_c.has_grad() || !in_c.needs_grad()) return;
      const double *g = out_c.grad_data();
      double *gx = in_c.grad();
      for (index_t i = 0; i < n; ++i) gx[i] += g[i];
    });
  }
  return out;
}

Tensor attend(Tape *tape, const Tensor &weights, const Tensor &sequence) {
  if (weights.rank() != 2 || sequence.rank() != 3 ||
      weights.dim(0) != sequence.dim(0) || weights.dim(1) != sequence.dim(1)) {
    throw DataError("attend: weights " + weights.shape_str() + " vs sequence " +
                    sequence.shape_str());
  }
  const index_t N = sequence.dim(0), T = sequence.dim(1), F = sequence.dim(2);
  Tensor out = Tensor::zeros({N, F});
  const double *wd = weights.data();
  const double *xd = sequence.data();
  double *od = out.data();
  for (index_t nn = 0; nn < N; ++nn) {
    double *on = od + nn * F;
    for (index_t t = 0; t < T; ++t) {
      const double a = wd[nn * T + t];
      const double *xt = xd + (nn * T + t) * F;
      for (index_t f = 0; f < F; ++f) on[f] += a * xt[f];
    }
  }
  if (want_grad(tape, {&weights, &sequence})) {
    out.mark_needs_grad();
    Tensor w_c = weights, x_c = sequence, out_c = out;
    tape->record({w_c, x_c, out_c}, [=]() mutable {
      if (!out_c.has_grad()) return;
      const double *g = out_c.grad_data();
      if (w_c.needs_grad()) {
        double *gw = w_c.grad();
        const double *xv = x_c.data();
        for (index_t nn = 0; nn < N; ++nn) {
          for (index_t t = 0; t < T; ++t) {
            double acc = 0.0;
            const double *xt = xv + (nn * T + t) * F;
            for (index_t f = 0; f < F; ++f) acc += g[nn * F + f] * xt[f];
            gw[nn * T + t] += acc;
          }
        }
      }
      if (x_c.needs_grad()) {
        double *gx = x_c.grad();
        const double *wv = w_c.data();
        for (index_t nn = 0; nn < N; ++nn) {
          for (index_t t = 0; t < T; ++t) {
            const double a = wv[nn * T + t];
            double *gxt = gx + (nn * T + t) * F;
            for (index_t f = 0; f < F; ++f) gxt[f] += a * g[nn * F + f];
          }
        }
      }
    });
  }
  return out;
}

Tensor cross_entropy_mean(Tape *tape, const Tensor &logits,
                          const std::vector<int> &labels) {
  if (logits.rank() != 2) {
    throw DataError("cross_entropy_mean: logits must be (N,C), got " + logits.shape_str());
  }
  const index_t N = logits.dim(0), C = logits.dim(1);
  if (static_cast<index_t>(labels.size()) != N) {
    throw DataError("cross_entropy_mean: " + std::to_string(labels.size()) +
                    " labels for " + std::to_string(N) + " rows");
  }
  for (int y : labels) {
    if (y < 0 || y >= C) {
      throw DataError("cross_entropy_mean: label " + std::to_string(y) +
                      " outside [0," + std::to_string(C) + ")");
    }
  }
  const double *xd = logits.data();
  double loss = 0.0;
  for (index_t r = 0; r < N; ++r) {
    const double *xr = xd + r * C;
    double mx = xr[0];
    for (index_t j = 1; j < C; ++j) mx = std::max(mx, xr[j]);
    double s = 0.0;
    for (index_t j = 0; j < C; ++j) s += std::exp(xr[j] - mx);
    loss += (mx + std::log(s)) - xr[labels[static_cast<std::size_t>(r)]];
  }
  Tensor out = Tensor::scalar(loss / static_cast<double>(N));
  if (want_grad(tape, {&logits})) {
    out.mark_needs_grad();
    Tensor in_c = logits, out_c = out;
    std::vector<int> y = labels;
    tape->record({in_c, out_c}, [=]() mutable {
      if (!out_c.has_grad() || !in_c.needs_grad()) return;
      const double g = out_c.grad_data()[0] / static_cast<double>(N);
      const double *xv = in_c.data();
      double *gx = in_c.grad();
      for (index_t r = 0; r < N; ++r) {
        const double *xr = xv + r * C;
        double mx = xr[0];
        for (index_t j = 1; j < C; ++j) mx = std::max(mx, xr[j]);
        double s = 0.0;
        for (index_t j = 0; j < C; ++j) s += std::exp(xr[j] - mx);
        const double inv = 1.0 / s;
        for (index_t j = 0; j < C; ++j) {
          const double p = std::exp(xr[j] - mx) * inv;
          const double ind = (j == y[static_cast<std::size_t>(r)]) ? 1.0 : 0.0;
          gx[r * C + j] += g * (p - ind);
        }
      }
    });
  }
  return out;
}

}  // namespace lidkit
