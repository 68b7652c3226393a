// Copyright 2026 The Scanpath Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "scanpath/autograd/ops.hpp"
#include "scanpath/core/error.hpp"
#include "scanpath/nn/layers.hpp"
#include "support.hpp"

namespace scanpath {
namespace {

using testing::grad_check;
using testing::random_matrix;

constexpr double kTol = 1e-6;
// Composite layers chain many ops, so central differences carry more noise.
constexpr double kLayerTol = 1e-5;

// Projects an arbitrary output onto a scalar with fixed random weights so
// every output entry carries a distinct gradient.
ad::Var project(ad::Var v, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return ad::sum(ad::mul_const(v, random_matrix(rng, v.rows(), v.cols())));
}

struct Fixture {
  Rng rng = make_rng(11);
  nn::Parameter a{"a", random_matrix(rng, 4, 5)};
  nn::Parameter b{"b", random_matrix(rng, 4, 5)};
  nn::Parameter row{"row", random_matrix(rng, 1, 5)};
  nn::Parameter w{"w", random_matrix(rng, 5, 3)};
  nn::ParameterRefs all() { return {&a, &b, &row, &w}; }
};

using UnaryOp = ad::Var (*)(ad::Tape&, Fixture&);

struct OpCase {
  const char* name;
  UnaryOp build;
};

class OpGradient : public ::testing::TestWithParam<OpCase> {};

TEST_P(OpGradient, MatchesFiniteDifferences) {
  Fixture fx;
  const OpCase& c = GetParam();
  const auto r = grad_check(fx.all(), [&](ad::Tape& t) { return project(c.build(t, fx), 99); });
  EXPECT_LT(r.max_rel_error, kTol) << c.name << " abs " << r.max_abs_error;
}

ad::Var P(ad::Tape& t, nn::Parameter& p) { return t.parameter(p); }

const OpCase kOps[] = {
    {"add", [](ad::Tape& t, Fixture& f) { return ad::add(P(t, f.a), P(t, f.b)); }},
    {"sub", [](ad::Tape& t, Fixture& f) { return ad::sub(P(t, f.a), P(t, f.b)); }},
    {"mul", [](ad::Tape& t, Fixture& f) { return ad::mul(P(t, f.a), P(t, f.b)); }},
    {"add_row", [](ad::Tape& t, Fixture& f) { return ad::add_row(P(t, f.a), P(t, f.row)); }},
    {"mul_row", [](ad::Tape& t, Fixture& f) { return ad::mul_row(P(t, f.a), P(t, f.row)); }},
    {"scale", [](ad::Tape& t, Fixture& f) { return ad::scale(P(t, f.a), -1.7); }},
    {"add_scalar", [](ad::Tape& t, Fixture& f) { return ad::add_scalar(P(t, f.a), 0.3); }},
    {"scale_rows",
     [](ad::Tape& t, Fixture& f) { return ad::scale_rows(P(t, f.a), {1.0, -2.0, 0.0, 0.5}); }},
    {"matmul", [](ad::Tape& t, Fixture& f) { return ad::matmul(P(t, f.a), P(t, f.w)); }},
    {"matmul_nt", [](ad::Tape& t, Fixture& f) { return ad::matmul_nt(P(t, f.a), P(t, f.b)); }},
    {"sigmoid", [](ad::Tape& t, Fixture& f) { return ad::sigmoid(P(t, f.a)); }},
    {"tanh", [](ad::Tape& t, Fixture& f) { return ad::tanh(P(t, f.a)); }},
    {"relu", [](ad::Tape& t, Fixture& f) { return ad::relu(P(t, f.a)); }},
    {"log", [](ad::Tape& t, Fixture& f) { return ad::log(ad::add_scalar(ad::square(P(t, f.a)), 0.5)); }},
    {"softmax", [](ad::Tape& t, Fixture& f) { return ad::softmax_rows(P(t, f.a)); }},
    {"softmax_masked",
     [](ad::Tape& t, Fixture& f) {
       return ad::softmax_rows(P(t, f.a), {true, false, true, true, false});
     }},
    {"concat_cols",
     [](ad::Tape& t, Fixture& f) {
       const ad::Var parts[] = {P(t, f.a), P(t, f.b)};
       return ad::concat_cols(parts);
     }},
    {"concat_rows",
     [](ad::Tape& t, Fixture& f) {
       const ad::Var parts[] = {P(t, f.a), P(t, f.row)};
       return ad::concat_rows(parts);
     }},
    {"slices",
     [](ad::Tape& t, Fixture& f) {
       return ad::add(ad::slice_rows(P(t, f.a), 1, 2), ad::slice_rows(P(t, f.b), 0, 2));
     }},
    {"slice_cols", [](ad::Tape& t, Fixture& f) { return ad::slice_cols(P(t, f.a), 1, 3); }},
    {"gather_rows", [](ad::Tape& t, Fixture& f) { return ad::gather_rows(P(t, f.a), {3, 0, 3, 1}); }},
    {"mean", [](ad::Tape& t, Fixture& f) { return ad::mean(ad::mul(P(t, f.a), P(t, f.a))); }},
    {"block_mean", [](ad::Tape& t, Fixture& f) { return ad::block_mean_rows(P(t, f.a), 2); }},
    {"layer_norm", [](ad::Tape& t, Fixture& f) { return ad::layer_norm(P(t, f.a)); }},
    {"batch_norm",
     [](ad::Tape& t, Fixture& f) { return ad::batch_norm(P(t, f.a), {1, 0, 1, 1}).y; }},
    {"normalize_fixed",
     [](ad::Tape& t, Fixture& f) {
       Matrix mean(1, 5, 0.2), var(1, 5, 1.5);
       return ad::normalize_fixed(P(t, f.a), mean, var, {1, 1, 0, 1});
     }},
    {"lstm_pointwise",
     [](ad::Tape& t, Fixture& f) {
       // 4 x 20 pre-activations assembled from the fixture, 4 x 5 cell state.
       const ad::Var parts[] = {P(t, f.a), P(t, f.b), ad::scale(P(t, f.a), 0.5),
                                ad::scale(P(t, f.b), -0.7)};
       return ad::lstm_pointwise(ad::concat_cols(parts), ad::tanh(P(t, f.b)));
     }},
    {"row_blend",
     [](ad::Tape& t, Fixture& f) { return ad::row_blend(P(t, f.a), P(t, f.b), {1, 0, 1, 0}); }},
    {"clamp_interior",
     [](ad::Tape& t, Fixture& f) { return ad::clamp(ad::scale(P(t, f.a), 0.01), -1.0, 1.0); }},
};

INSTANTIATE_TEST_SUITE_P(Ops, OpGradient, ::testing::ValuesIn(kOps),
                         [](const auto& info) { return std::string(info.param.name); });

TEST(Tape, ParameterRecordedOnce) {
  nn::Parameter p("p", Matrix(2, 2, 1.0));
  ad::Tape t;
  const ad::Var a = t.parameter(p);
  const ad::Var b = t.parameter(p);
  EXPECT_EQ(a.id(), b.id());
  p.zero_grad();
  t.backward(ad::sum(ad::add(a, b)));
  for (double g : p.grad.values()) EXPECT_EQ(g, 2.0);
}

TEST(Tape, GradientsAccumulateAcrossBackwardCalls) {
  nn::Parameter p("p", Matrix(1, 3, 2.0));
  p.zero_grad();
  for (int i = 0; i < 2; ++i) {
    ad::Tape t;
    t.backward(ad::sum(ad::square(t.parameter(p))));
  }
  for (double g : p.grad.values()) EXPECT_EQ(g, 8.0);
}

TEST(Tape, NoGradTapeLeavesGradientsUntouched) {
  nn::Parameter p("p", Matrix(1, 3, 2.0));
  p.zero_grad();
  ad::Tape t(false);
  const ad::Var y = ad::sum(ad::square(t.parameter(p)));
  EXPECT_EQ(y.value()(0, 0), 12.0);
  EXPECT_FALSE(t.needs_grad(y.id()));
}

TEST(Tape, ConstantsReceiveNoGradient) {
  nn::Parameter p("p", Matrix(1, 2, 1.0));
  ad::Tape t;
  const ad::Var c = t.constant(Matrix(1, 2, 3.0));
  const ad::Var y = ad::sum(ad::mul(t.parameter(p), c));
  EXPECT_FALSE(t.needs_grad(c.id()));
  p.zero_grad();
  t.backward(y);
  EXPECT_EQ(p.grad(0, 1), 3.0);
}

TEST(Ops, ShapeMismatchThrows) {
  ad::Tape t;
  const ad::Var a = t.constant(Matrix(2, 3));
  const ad::Var b = t.constant(Matrix(3, 2));
  EXPECT_THROW(ad::add(a, b), ShapeError);
  EXPECT_THROW(ad::matmul(a, a), ShapeError);
}

TEST(Ops, MaskedSoftmaxGivesExactZeros) {
  ad::Tape t;
  const ad::Var s = ad::softmax_rows(t.constant(Matrix{{1, 2, 3}, {0, 0, 0}}), {true, false, true});
  EXPECT_EQ(s.value()(0, 1), 0.0);
  EXPECT_NEAR(s.value()(1, 0), 0.5, 1e-15);
  EXPECT_NEAR(s.value()(0, 0) + s.value()(0, 2), 1.0, 1e-15);
}

TEST(Ops, BatchNormIgnoresMaskedRows) {
  ad::Tape t;
  Matrix x{{1, 10}, {3, 20}, {1000, -1000}};
  const auto out = ad::batch_norm(t.constant(x), {1, 1, 0});
  EXPECT_DOUBLE_EQ(out.batch_mean(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(out.batch_var(0, 1), 25.0);
  EXPECT_EQ(out.y.value()(2, 0), 0.0);
  EXPECT_EQ(out.count, 2u);
}

// --- layers -----------------------------------------------------------------

TEST(Layers, LinearGradient) {
  Rng rng = make_rng(3);
  nn::Linear lin("lin", 4, 3, rng);
  nn::Parameter x("x", random_matrix(rng, 5, 4));
  nn::ParameterRefs ps{&x};
  lin.collect(ps);
  const auto r = grad_check(ps, [&](ad::Tape& t) { return project(lin(t.parameter(x)), 1); });
  EXPECT_LT(r.max_rel_error, kTol);
}

TEST(Layers, LayerNormGradient) {
  Rng rng = make_rng(4);
  nn::LayerNorm ln("ln", 6);
  nn::Parameter x("x", random_matrix(rng, 3, 6));
  nn::ParameterRefs ps{&x};
  ln.collect(ps);
  const auto r = grad_check(ps, [&](ad::Tape& t) { return project(ln(t.parameter(x)), 2); });
  EXPECT_LT(r.max_rel_error, kTol);
}

TEST(Layers, BatchNormTrainGradientAndRunningStats) {
  Rng rng = make_rng(5);
  nn::BatchNorm bn("bn", 3);
  nn::Parameter x("x", random_matrix(rng, 6, 3));
  nn::ParameterRefs ps{&x};
  bn.collect(ps);
  const std::vector<double> mask{1, 1, 0, 1, 1, 1};
  // The check runs many forwards; running statistics are not trainable and
  // do not affect train-mode outputs.
  const auto r =
      grad_check(ps, [&](ad::Tape& t) { return project(bn.forward(t.parameter(x), mask, true), 3); });
  EXPECT_LT(r.max_rel_error, kTol);

  nn::BatchNorm fresh("bn", 3);
  nn::ParameterRefs fp;
  fresh.collect(fp);
  ad::Tape t;
  fresh.forward(t.constant(x.value), mask, true);
  const nn::Parameter* mean = nullptr;
  for (nn::Parameter* p : fp)
    if (!p->trainable && p->name.find("mean") != std::string::npos) mean = p;
  ASSERT_NE(mean, nullptr);
  double m0 = 0;
  for (std::size_t i = 0; i < 6; ++i)
    if (mask[i] > 0) m0 += x.value(i, 0) / 5.0;
  EXPECT_NEAR((*mean).value(0, 0), 0.1 * m0, 1e-12);
}

TEST(Layers, MultiHeadAttentionGradientWithKeyMask) {
  Rng rng = make_rng(6);
  nn::MultiHeadAttention mha("mha", 8, 2, rng);
  nn::Parameter x("x", random_matrix(rng, 2 * 4, 8));
  nn::ParameterRefs ps{&x};
  mha.collect(ps);
  const std::vector<std::vector<bool>> keys{{true, true, true, false}, {true, false, true, true}};
  const auto r = grad_check(
      ps, [&](ad::Tape& t) { return project(mha.forward(t.parameter(x), 2, 4, keys), 4); });
  EXPECT_LT(r.max_rel_error, kLayerTol);
}

TEST(Layers, MaskedKeysDoNotInfluenceOutput) {
  Rng rng = make_rng(7);
  nn::MultiHeadAttention mha("mha", 4, 2, rng);
  Matrix x = random_matrix(rng, 3, 4);
  const std::vector<std::vector<bool>> keys{{true, true, false}};
  ad::Tape t1(false), t2(false);
  const Matrix y1 = mha.forward(t1.constant(x), 1, 3, keys).value();
  for (std::size_t c = 0; c < 4; ++c) x(2, c) += 5.0;
  const Matrix y2 = mha.forward(t2.constant(x), 1, 3, keys).value();
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(y1(r, c), y2(r, c), 1e-14);
}

TEST(Layers, TransformerLayerGradient) {
  Rng rng = make_rng(8);
  nn::TransformerEncoderLayer layer("enc", 6, 2, 10, rng);
  nn::Parameter x("x", random_matrix(rng, 3, 6));
  nn::ParameterRefs ps{&x};
  layer.collect(ps);
  const std::vector<std::vector<bool>> keys{{true, true, true}};
  const auto r = grad_check(
      ps, [&](ad::Tape& t) { return project(layer.forward(t.parameter(x), 1, 3, keys), 5); });
  EXPECT_LT(r.max_rel_error, kLayerTol);
}

TEST(Layers, BiLstmGradient) {
  Rng rng = make_rng(9);
  nn::BiLstm lstm("lstm", 3, 4, rng);
  // Time-major, 2 samples x 4 steps; the second sample stops after 2 steps.
  nn::Parameter x("x", random_matrix(rng, 4 * 2, 3));
  nn::ParameterRefs ps{&x};
  lstm.collect(ps);
  const auto r = grad_check(ps, [&](ad::Tape& t) {
    const auto out = lstm.forward(t.parameter(x), 2, 4, {4, 2});
    return ad::add(project(out.sequence, 6), project(out.final, 7));
  });
  EXPECT_LT(r.max_rel_error, kLayerTol);
}

TEST(Layers, BiLstmIgnoresPadding) {
  Rng rng = make_rng(10);
  nn::BiLstm lstm("lstm", 2, 3, rng);
  const Matrix short_x = random_matrix(rng, 3, 2);  // 1 sample x 3 steps
  Matrix long_x(6, 2);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 2; ++c) long_x(r, c) = short_x(r, c);
  for (std::size_t r = 3; r < 6; ++r) long_x(r, 0) = 9.0;
  ad::Tape t(false);
  const Matrix a = lstm.forward(t.constant(short_x), 1, 3, {3}).final.value();
  const Matrix b = lstm.forward(t.constant(long_x), 1, 6, {3}).final.value();
  EXPECT_EQ(a, b);
}

TEST(Layers, DropoutIsIdentityOutsideTraining) {
  Rng rng = make_rng(12);
  ad::Tape t(false);
  const Matrix x = random_matrix(rng, 4, 4);
  EXPECT_EQ(nn::dropout(t.constant(x), 0.5, false, &rng).value(), x);
  const Matrix y = nn::dropout(t.constant(x), 0.5, true, &rng).value();
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_TRUE(y[i] == 0.0 || std::abs(y[i] - 2.0 * x[i]) < 1e-15);
}

TEST(Layers, LayoutMapsAreInverse) {
  const auto tm = nn::to_time_major(3, 5, 5);
  const auto sm = nn::to_sample_major(3, 5);
  ASSERT_EQ(tm.size(), 15u);
  for (std::size_t i = 0; i < 15; ++i) EXPECT_EQ(tm[sm[i]], i);
  const auto mask = nn::time_major_mask({2, 0}, 3);
  EXPECT_EQ(mask, (std::vector<double>{1, 0, 1, 0, 0, 0}));
}

TEST(Layers, SinusoidalEncoding) {
  const Matrix pe = nn::sinusoidal_encoding(4, 6);
  EXPECT_EQ(pe(0, 0), 0.0);
  EXPECT_EQ(pe(0, 1), 1.0);
  EXPECT_NEAR(pe(1, 0), std::sin(1.0), 1e-15);
  EXPECT_NEAR(pe(1, 2), std::sin(1.0 / std::pow(10000.0, 2.0 / 6.0)), 1e-15);
}

}  // namespace
}  // namespace scanpath
