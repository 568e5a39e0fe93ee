// tests/test_tensor_ops.cc

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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "lidkit/errors.h"
#include "lidkit/ops.h"
#include "lidkit/rng.h"
#include "lidkit/tensor.h"

using namespace lidkit;

namespace {

Tensor random_tensor(std::vector<index_t> shape, Rng &rng, double lo = -1.0,
                     double hi = 1.0, bool requires_grad = false) {
  Tensor t(std::move(shape), requires_grad);
  for (index_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.uniform(lo, hi);
  return t;
}

// Independent oracle: direct nested-loop 2D convolution, no shared code with
// the engine implementation.
std::vector<double> conv_oracle(const std::vector<double> &x, index_t ci,
                                index_t h, index_t w, const std::vector<double> &wt,
                                index_t co, int k, int pad, int stride,
                                index_t &ho_out, index_t &wo_out) {
  const index_t ho = (h + 2 * pad - k) / stride + 1;
  const index_t wo = (w + 2 * pad - k) / stride + 1;
  ho_out = ho;
  wo_out = wo;
  std::vector<double> out(static_cast<std::size_t>(co * ho * wo), 0.0);
  for (index_t oc = 0; oc < co; ++oc) {
    for (index_t oh = 0; oh < ho; ++oh) {
      for (index_t ow = 0; ow < wo; ++ow) {
        double acc = 0.0;
        for (index_t ic = 0; ic < ci; ++ic) {
          for (int kh = 0; kh < k; ++kh) {
            for (int kw = 0; kw < k; ++kw) {
              const index_t ih = oh * stride + kh - pad;
              const index_t iw = ow * stride + kw - pad;
              if (ih < 0 || ih >= h || iw < 0 || iw >= w) continue;
              acc += wt[static_cast<std::size_t>(((oc * ci + ic) * k + kh) * k + kw)] *
                     x[static_cast<std::size_t>((ic * h + ih) * w + iw)];
            }
          }
        }
        out[static_cast<std::size_t>((oc * ho + oh) * wo + ow)] = acc;
      }
    }
  }
  return out;
}

// Central finite differences against one leaf coordinate.
double fd_grad(const std::function<double()> &eval, Tensor leaf, index_t i,
               double step = 1e-5) {
  double *d = leaf.data();
  const double keep = d[i];
  d[i] = keep + step;
  const double fp = eval();
  d[i] = keep - step;
  const double fm = eval();
  d[i] = keep;
  return (fp - fm) / (2.0 * step);
}

void expect_grad_matches(const std::function<Tensor(Tape *)> &build,
                         std::vector<Tensor> leaves, double tol = 1e-4) {
  for (Tensor &l : leaves) l.zero_grad();
  Tape tape;
  Tensor loss = build(&tape);
  tape.backward(loss);
  std::vector<std::vector<double>> analytic;
  for (Tensor &l : leaves) {
    analytic.emplace_back(l.grad(), l.grad() + l.numel());
  }
  auto eval = [&]() { return build(nullptr).value(); };
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    for (index_t i = 0; i < leaves[li].numel(); ++i) {
      const double num = fd_grad(eval, leaves[li], i);
      const double ana = analytic[li][static_cast<std::size_t>(i)];
      const double rel = std::fabs(ana - num) /
                         std::max(std::fabs(ana) + std::fabs(num), 1e-4);
      CAPTURE(li);
      CAPTURE(i);
      CHECK(rel < tol);
    }
  }
}

}  // namespace

TEST_CASE("tensor basics and invariants") {
  Tensor t = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.numel() == 6);
  CHECK(t.at({1, 2}) == 6.0);
  CHECK(t.shape_str() == "(2, 3)");
  CHECK(t.all_finite());
  CHECK_THROWS_AS(Tensor::zeros({0, 2}), DataError);
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1.0}), DataError);
  CHECK_THROWS_AS(t.value(), DataError);

  Tensor c = t.clone();
  c.data()[0] = 99;
  CHECK(t.data()[0] == 1.0);
}

TEST_CASE("conv2d identity kernel reproduces input") {
  Tensor x = Tensor::full({1, 3, 3}, 1.0);
  Tensor w = Tensor::zeros({1, 1, 3, 3});
  w.at({0, 0, 1, 1}) = 1.0;
  ConvSpec spec{3, 1, 1, 1, 1};
  Tensor y = conv2d(nullptr, x, spec, w, Tensor());
  REQUIRE(y.shape() == std::vector<index_t>{1, 3, 3});
  for (index_t i = 0; i < y.numel(); ++i) CHECK(y.data()[i] == doctest::Approx(1.0));
}

TEST_CASE("conv2d zero weights give zero output") {
  Rng rng(7);
  Tensor x = random_tensor({2, 4, 5}, rng);
  ConvSpec spec{3, 1, 1, 2, 3};
  Tensor w = Tensor::zeros({3, 2, 3, 3});
  Tensor b = Tensor::zeros({3});
  Tensor y = conv2d(nullptr, x, spec, w, b);
  for (index_t i = 0; i < y.numel(); ++i) CHECK(y.data()[i] == 0.0);
}

TEST_CASE("conv2d stride 2 matches nested-loop oracle") {
  Rng rng(13);
  Tensor x = random_tensor({1, 4, 4}, rng);
  Tensor w = random_tensor({1, 1, 3, 3}, rng);
  ConvSpec spec{3, 1, 2, 1, 1};
  Tensor y = conv2d(nullptr, x, spec, w, Tensor());
  index_t ho = 0, wo = 0;
  std::vector<double> expect =
      conv_oracle(std::vector<double>(x.data(), x.data() + x.numel()), 1, 4, 4,
                  std::vector<double>(w.data(), w.data() + w.numel()), 1, 3, 1, 2, ho, wo);
  REQUIRE(y.shape() == std::vector<index_t>{1, ho, wo});
  for (index_t i = 0; i < y.numel(); ++i) {
    CHECK(y.data()[i] == doctest::Approx(expect[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("conv2d random cases match oracle for both strides and kernels") {
  Rng rng(101);
  for (int rep = 0; rep < 8; ++rep) {
    const index_t ci = rng.uniform_int(1, 3);
    const index_t co = rng.uniform_int(1, 3);
    const index_t h = rng.uniform_int(1, 9);
    const index_t w = rng.uniform_int(1, 9);
    const int stride = rep % 2 ? 2 : 1;
    const bool one_by_one = rep % 3 == 0;
    const int k = one_by_one ? 1 : 3;
    const int pad = one_by_one ? 0 : 1;
    Tensor x = random_tensor({2, ci, h, w}, rng);
    Tensor wt = random_tensor({co, ci, k, k}, rng);
    ConvSpec spec{k, pad, stride, ci, co};
    Tensor y = conv2d(nullptr, x, spec, wt, Tensor());
    for (index_t n = 0; n < 2; ++n) {
      index_t ho = 0, wo = 0;
      std::vector<double> xs(x.data() + n * ci * h * w, x.data() + (n + 1) * ci * h * w);
      std::vector<double> expect =
          conv_oracle(xs, ci, h, w, std::vector<double>(wt.data(), wt.data() + wt.numel()),
                      co, k, pad, stride, ho, wo);
      for (index_t i = 0; i < co * ho * wo; ++i) {
        CHECK(y.data()[n * co * ho * wo + i] ==
              doctest::Approx(expect[static_cast<std::size_t>(i)]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("conv2d output extents follow the length formula") {
  for (index_t n = 1; n <= 64; ++n) {
    for (int stride : {1, 2}) {
      CHECK(ConvSpec::out_extent(n, 3, 1, stride) ==
            (n + 2 * 1 - 3) / stride + 1);
      // ceil(n / stride) for the 3x3 pad-1 case
      CHECK(ConvSpec::out_extent(n, 3, 1, stride) == (n + stride - 1) / stride);
    }
  }
}

TEST_CASE("conv2d rejects channel mismatch with diagnostics") {
  Tensor x = Tensor::zeros({2, 4, 4});
  Tensor w = Tensor::zeros({3, 3, 3, 3});
  ConvSpec spec{3, 1, 1, 3, 3};
  CHECK_THROWS_WITH_AS(conv2d(nullptr, x, spec, w, Tensor()),
                       doctest::Contains("channels"), DataError);
}

TEST_CASE("affine matches hand arithmetic") {
  Tensor x = Tensor::from({2}, {1, 2});
  Tensor w = Tensor::from({2, 2}, {1, 1, 0, 1});
  Tensor b = Tensor::zeros({2});
  Tensor y = affine(nullptr, x, w, b);
  CHECK(y.data()[0] == doctest::Approx(3.0));
  CHECK(y.data()[1] == doctest::Approx(2.0));
}

TEST_CASE("affine identity and zero-weight cases") {
  Tensor x = Tensor::from({2, 2}, {1, 2, 3, 4});
  Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  Tensor b0 = Tensor::zeros({2});
  Tensor y = affine(nullptr, x, eye, b0);
  for (index_t i = 0; i < 4; ++i) CHECK(y.data()[i] == x.data()[i]);

  Tensor wz = Tensor::zeros({2, 2});
  Tensor b = Tensor::from({2}, {0.5, -1.5});
  Tensor z = affine(nullptr, x, wz, b);
  CHECK(z.data()[0] == 0.5);
  CHECK(z.data()[1] == -1.5);
  CHECK(z.data()[2] == 0.5);
  CHECK(z.data()[3] == -1.5);

  CHECK_THROWS_AS(affine(nullptr, Tensor::zeros({3}), eye, b0), DataError);
}

TEST_CASE("elementwise values") {
  Tensor x = Tensor::from({3}, {0.0, -1.0, 1.0});
  CHECK(tanh_op(nullptr, x).data()[0] == 0.0);
  CHECK(sigmoid(nullptr, x).data()[0] == doctest::Approx(0.5));
  CHECK(relu(nullptr, x).data()[1] == 0.0);
  // series oracle value for tanh(1)
  CHECK(tanh_op(nullptr, x).data()[2] == doctest::Approx(0.761594).epsilon(1e-6));
}

TEST_CASE("tanh gradient at zero is one") {
  Tensor x = Tensor::from({1}, {0.0}, true);
  Tape tape;
  Tensor y = sum(&tape, tanh_op(&tape, x));
  tape.backward(y);
  CHECK(x.grad()[0] == doctest::Approx(1.0));
}

TEST_CASE("softmax basics") {
  Tensor u = Tensor::full({4}, 0.7);
  Tensor su = softmax(nullptr, u);
  for (index_t i = 0; i < 4; ++i) CHECK(su.data()[i] == doctest::Approx(0.25).epsilon(1e-12));

  Tensor one = Tensor::from({1}, {3.0});
  CHECK(softmax(nullptr, one).data()[0] == doctest::Approx(1.0));

  Tensor x = Tensor::from({2}, {0.7616, 0.0});
  Tensor sx = softmax(nullptr, x);
  CHECK(sx.data()[0] == doctest::Approx(0.6816).epsilon(1e-3));
  CHECK(sx.data()[1] == doctest::Approx(0.3184).epsilon(1e-3));
}

TEST_CASE("softmax sums to one and shift invariance (property)") {
  Rng rng(23);
  for (int rep = 0; rep < 50; ++rep) {
    const index_t n = rng.uniform_int(1, 12);
    Tensor x = random_tensor({n}, rng, -30.0, 30.0);
    Tensor y = softmax(nullptr, x);
    double s = 0.0;
    for (index_t i = 0; i < n; ++i) {
      CHECK(y.data()[i] > 0.0);
      s += y.data()[i];
    }
    CHECK(std::fabs(s - 1.0) < 1e-9);
    const double c = rng.uniform(-5.0, 5.0);
    Tensor xc = x.clone();
    for (index_t i = 0; i < n; ++i) xc.data()[i] += c;
    Tensor yc = softmax(nullptr, xc);
    for (index_t i = 0; i < n; ++i) CHECK(std::fabs(yc.data()[i] - y.data()[i]) < 1e-9);
  }
}

TEST_CASE("batch_norm inference identity and constant-channel training") {
  Tensor x = Tensor::from({1, 1, 2, 2}, {1, 2, 3, 4});
  BatchNormState st = BatchNormState::make(1);
  Tensor y = batch_norm(nullptr, x, st, false);
  for (index_t i = 0; i < 4; ++i) CHECK(y.data()[i] == doctest::Approx(x.data()[i]));

  Tensor xc = Tensor::full({2, 1, 1, 2}, 5.0);
  BatchNormState st2 = BatchNormState::make(1);
  Tensor yc = batch_norm(nullptr, xc, st2, true);
  for (index_t i = 0; i < 4; ++i) CHECK(yc.data()[i] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("batch_norm training normalizes to zero mean unit variance") {
  Rng rng(31);
  Tensor x = random_tensor({4, 2, 2, 2}, rng, -3.0, 3.0);
  BatchNormState st = BatchNormState::make(2);
  Tensor y = batch_norm(nullptr, x, st, true);
  // direct statistics oracle per channel
  for (index_t c = 0; c < 2; ++c) {
    double mean = 0.0, var = 0.0;
    index_t m = 0;
    for (index_t n = 0; n < 4; ++n) {
      for (index_t i = 0; i < 4; ++i) {
        mean += y.at({n, c, i / 2, i % 2});
        ++m;
      }
    }
    mean /= static_cast<double>(m);
    for (index_t n = 0; n < 4; ++n) {
      for (index_t i = 0; i < 4; ++i) {
        const double d = y.at({n, c, i / 2, i % 2}) - mean;
        var += d * d;
      }
    }
    var /= static_cast<double>(m);
    CHECK(std::fabs(mean) < 1e-6);
    CHECK(std::fabs(var - 1.0) < 1e-3);  // eps shifts variance slightly below 1
  }
  CHECK_THROWS_AS(batch_norm(nullptr, Tensor::zeros({1, 2, 1, 1}), st, true), DataError);
}

TEST_CASE("backward on sum gives ones and ignores unreachable leaves") {
  Tensor x = Tensor::from({3}, {1, 2, 3}, true);
  Tensor unused = Tensor::from({2}, {5, 6}, true);
  Tape tape;
  Tensor loss = sum(&tape, x);
  tape.backward(loss);
  CHECK(x.grad()[0] == 1.0);
  CHECK(x.grad()[1] == 1.0);
  CHECK(x.grad()[2] == 1.0);
  CHECK(unused.grad()[0] == 0.0);
  CHECK(unused.grad()[1] == 0.0);
}

TEST_CASE("backward rejects non-scalar loss; zero scaling kills gradients") {
  Tensor x = Tensor::from({2}, {1, 2}, true);
  Tape tape;
  Tensor y = tanh_op(&tape, x);
  CHECK_THROWS_AS(tape.backward(y), DataError);

  Tape tape2;
  Tensor loss = sum(&tape2, scale(&tape2, tanh_op(&tape2, x), 0.0));
  x.zero_grad();
  tape2.backward(loss);
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == 0.0);
}

TEST_CASE("finite differences: dense ops") {
  Rng rng(47);
  Tensor r3 = random_tensor({2, 3}, rng);

  SUBCASE("affine") {
    Tensor x = random_tensor({2, 4}, rng, -1, 1, true);
    Tensor w = random_tensor({3, 4}, rng, -1, 1, true);
    Tensor b = random_tensor({3}, rng, -1, 1, true);
    expect_grad_matches(
        [&](Tape *t) { return sum(t, mul(t, affine(t, x, w, b), r3)); }, {x, w, b});
  }
  SUBCASE("tanh/sigmoid/relu") {
    Tensor x = random_tensor({2, 3}, rng, -2, 2, true);
    for (index_t i = 0; i < x.numel(); ++i) {
      if (std::fabs(x.data()[i]) < 0.1) x.data()[i] += 0.3;  // keep away from relu kink
    }
    expect_grad_matches([&](Tape *t) { return sum(t, mul(t, tanh_op(t, x), r3)); }, {x});
    expect_grad_matches([&](Tape *t) { return sum(t, mul(t, sigmoid(t, x), r3)); }, {x});
    expect_grad_matches([&](Tape *t) { return sum(t, mul(t, relu(t, x), r3)); }, {x});
  }
  SUBCASE("softmax and log-softmax") {
    Tensor x = random_tensor({2, 3}, rng, -2, 2, true);
    expect_grad_matches([&](Tape *t) { return sum(t, mul(t, softmax_rows(t, x), r3)); }, {x});
    expect_grad_matches([&](Tape *t) { return sum(t, mul(t, log_softmax_rows(t, x), r3)); }, {x});
  }
  SUBCASE("cross entropy") {
    Tensor x = random_tensor({3, 4}, rng, -2, 2, true);
    std::vector<int> labels{1, 3, 0};
    expect_grad_matches([&](Tape *t) { return cross_entropy_mean(t, x, labels); }, {x});
  }
}

TEST_CASE("finite differences: conv and batch norm") {
  Rng rng(53);
  SUBCASE("conv stride 1") {
    Tensor x = random_tensor({1, 2, 4, 5}, rng, -1, 1, true);
    Tensor w = random_tensor({2, 2, 3, 3}, rng, -1, 1, true);
    Tensor b = random_tensor({2}, rng, -1, 1, true);
    Tensor r = random_tensor({1, 2, 4, 5}, rng);
    ConvSpec spec{3, 1, 1, 2, 2};
    expect_grad_matches(
        [&](Tape *t) { return sum(t, mul(t, conv2d(t, x, spec, w, b), r)); }, {x, w, b});
  }
  SUBCASE("conv stride 2") {
    Tensor x = random_tensor({2, 1, 5, 6}, rng, -1, 1, true);
    Tensor w = random_tensor({2, 1, 3, 3}, rng, -1, 1, true);
    Tensor r = random_tensor({2, 2, 3, 3}, rng);
    ConvSpec spec{3, 1, 2, 1, 2};
    expect_grad_matches(
        [&](Tape *t) { return sum(t, mul(t, conv2d(t, x, spec, w, Tensor()), r)); }, {x, w});
  }
  SUBCASE("1x1 shortcut conv stride 2") {
    Tensor x = random_tensor({1, 3, 4, 5}, rng, -1, 1, true);
    Tensor w = random_tensor({2, 3, 1, 1}, rng, -1, 1, true);
    Tensor r = random_tensor({1, 2, 2, 3}, rng);
    ConvSpec spec{1, 0, 2, 3, 2};
    expect_grad_matches(
        [&](Tape *t) { return sum(t, mul(t, conv2d(t, x, spec, w, Tensor()), r)); }, {x, w});
  }
  SUBCASE("batch norm training mode") {
    Tensor x = random_tensor({3, 2, 2, 2}, rng, -2, 2, true);
    BatchNormState st = BatchNormState::make(2);
    st.gamma = Tensor::from({2}, {1.3, 0.7}, true);
    st.beta = Tensor::from({2}, {0.1, -0.2}, true);
    Tensor r = random_tensor({3, 2, 2, 2}, rng);
    expect_grad_matches(
        [&](Tape *t) { return sum(t, mul(t, batch_norm(t, x, st, true), r)); },
        {x, st.gamma, st.beta});
  }
}

TEST_CASE("finite differences: structural ops") {
  Rng rng(59);
  SUBCASE("mean_axis, slice, concat, stack, attend") {
    Tensor x = random_tensor({2, 3, 4}, rng, -1, 1, true);
    Tensor r24 = random_tensor({2, 4}, rng);
    expect_grad_matches(
        [&](Tape *t) { return sum(t, mul(t, mean_axis(t, x, 1), r24)); }, {x});

    Tensor m = random_tensor({3, 5}, rng, -1, 1, true);
    Tensor r32 = random_tensor({3, 2}, rng);
    expect_grad_matches(
        [&](Tape *t) { return sum(t, mul(t, slice_cols(t, m, 1, 3), r32)); }, {m});

    Tensor a = random_tensor({2, 2}, rng, -1, 1, true);
    Tensor b = random_tensor({2, 3}, rng, -1, 1, true);
    Tensor r25 = random_tensor({2, 5}, rng);
    expect_grad_matches(
        [&](Tape *t) { return sum(t, mul(t, concat_cols(t, a, b), r25)); }, {a, b});

    Tensor s0 = random_tensor({2, 3}, rng, -1, 1, true);
    Tensor s1 = random_tensor({2, 3}, rng, -1, 1, true);
    Tensor r223 = random_tensor({2, 2, 3}, rng);
    expect_grad_matches(
        [&](Tape *t) {
          return sum(t, mul(t, stack_steps(t, {s0, s1}), r223));
        },
        {s0, s1});

    Tensor alpha = random_tensor({2, 3}, rng, 0.1, 0.9, true);
    Tensor seq = random_tensor({2, 3, 4}, rng, -1, 1, true);
    Tensor r24b = random_tensor({2, 4}, rng);
    expect_grad_matches(
        [&](Tape *t) { return sum(t, mul(t, attend(t, alpha, seq), r24b)); }, {alpha, seq});
  }
  SUBCASE("slice_time") {
    Tensor x = random_tensor({2, 3, 4}, rng, -1, 1, true);
    Tensor r23 = random_tensor({2, 3}, rng);
    expect_grad_matches(
        [&](Tape *t) { return sum(t, mul(t, slice_time(t, x, 2), r23)); }, {x});
  }
}

TEST_CASE("cross entropy uniform logits equal ln(num_classes)") {
  Tensor logits = Tensor::zeros({2, 14});
  Tensor loss = cross_entropy_mean(nullptr, logits, {3, 7});
  CHECK(loss.value() == doctest::Approx(std::log(14.0)).epsilon(1e-9));
  CHECK_THROWS_AS(cross_entropy_mean(nullptr, logits, {3, 14}), DataError);
}

TEST_CASE("forward determinism: identical inputs produce identical bits") {
  Rng rng(71);
  Tensor x = random_tensor({2, 3, 8, 9}, rng);
  Tensor w = random_tensor({4, 3, 3, 3}, rng);
  ConvSpec spec{3, 1, 2, 3, 4};
  Tensor y1 = conv2d(nullptr, x, spec, w, Tensor());
  Tensor y2 = conv2d(nullptr, x, spec, w, Tensor());
  for (index_t i = 0; i < y1.numel(); ++i) CHECK(y1.data()[i] == y2.data()[i]);
}
