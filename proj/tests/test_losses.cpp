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

#include <array>
#include <cmath>

#include "scanpath/core/error.hpp"
#include "scanpath/losses.hpp"
#include "support.hpp"

namespace scanpath {
namespace {

NormalizedScanpath real_path(std::size_t horizon, std::vector<std::array<double, 2>> fix) {
  NormalizedScanpath ns;
  ns.steps = Matrix(horizon, 3);
  ns.true_length = fix.size();
  for (std::size_t i = 0; i < fix.size(); ++i) {
    ns.steps(i, 0) = fix[i][0];
    ns.steps(i, 1) = fix[i][1];
  }
  ns.steps(fix.size() - 1, 2) = 1.0;
  ns.meta = {100.0, 10};
  return ns;
}

TEST(ContentLoss, HandComputedValue) {
  const NormalizedScanpath r = real_path(4, {{0.1, 0.2}, {0.3, 0.4}});
  Matrix g(4, 3);
  g(0, 0) = 0.2;  g(0, 1) = 0.2;  g(0, 2) = 0.5;
  g(1, 0) = 0.3;  g(1, 1) = 0.0;  g(1, 2) = 0.5;
  g(2, 0) = 9.0;  g(3, 1) = 9.0;  // past the real length: ignored
  const LossWeights w{1.0, 2.0, 3.0};
  // step 0: 1*0.01 + 2*0 + 3*0.25; step 1: 0 + 2*0.16 + 3*0.25
  const double want = (0.01 + 0.75 + 0.32 + 0.75) / 2.0;
  EXPECT_NEAR(losses::scanpath_content_loss(g, r, w), want, 1e-15);
}

TEST(ContentLoss, BatchVersionMatchesScalar) {
  Rng rng = make_rng(3);
  const NormalizedScanpath r1 = real_path(5, {{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.1}});
  const NormalizedScanpath r2 = real_path(5, {{0.9, 0.9}});
  const Matrix g = testing::random_matrix(rng, 10, 3, 0.5);
  Matrix g1(5, 3), g2(5, 3);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      g1(i, c) = g(i, c);
      g2(i, c) = g(5 + i, c);
    }
  const LossWeights w{0.5, 1.0, 2.0};
  const NormalizedScanpath* targets[] = {&r1, &r2};
  ad::Tape t(false);
  const double batch = losses::scanpath_content_loss(t.constant(g), targets, w).value()(0, 0);
  const double want =
      (losses::scanpath_content_loss(g1, r1, w) + losses::scanpath_content_loss(g2, r2, w)) / 2.0;
  EXPECT_NEAR(batch, want, 1e-15);
}

TEST(ContentLoss, GradientCheck) {
  Rng rng = make_rng(4);
  nn::Parameter g("g", testing::random_matrix(rng, 8, 3, 0.5));
  const NormalizedScanpath r1 = real_path(4, {{0.1, 0.2}, {0.3, 0.4}});
  const NormalizedScanpath r2 = real_path(4, {{0.5, 0.5}, {0.6, 0.1}, {0.7, 0.3}, {0.2, 0.2}});
  const NormalizedScanpath* targets[] = {&r1, &r2};
  const auto res = testing::grad_check({&g}, [&](ad::Tape& t) {
    return losses::scanpath_content_loss(t.parameter(g), targets, {1.0, 2.0, 0.5});
  });
  EXPECT_LT(res.max_rel_error, 1e-6);
}

TEST(ContentLoss, RejectsBadInput) {
  const NormalizedScanpath r = real_path(4, {{0.1, 0.2}});
  EXPECT_THROW(losses::scanpath_content_loss(Matrix(0, 3), r, {}), ShapeError);
  NormalizedScanpath empty = r;
  empty.true_length = 0;
  EXPECT_THROW(losses::scanpath_content_loss(Matrix(4, 3), empty, {}), ValidationError);
  EXPECT_THROW((LossWeights{-1.0, 1.0, 1.0}.validate()), ValidationError);
  EXPECT_THROW((LossWeights{0.0, 0.0, 0.0}.validate()), ValidationError);
}

TEST(TextLoss, MeanSquaredDifference) {
  const Matrix a{{1, 2, 3}}, b{{1, 0, 0}};
  EXPECT_NEAR(losses::text_content_loss(a, b), 13.0 / 3.0, 1e-15);
  ad::Tape t(false);
  const Matrix batch{{1, 2, 3}, {0, 0, 0}};
  const Matrix target{{1, 0, 0}, {0, 0, 3}};
  EXPECT_NEAR(losses::text_content_loss(t.constant(batch), target).value()(0, 0),
              (13.0 / 3.0 + 3.0) / 2.0, 1e-15);
  EXPECT_THROW(losses::text_content_loss(a, Matrix{{1, 2}}), ShapeError);
}

TEST(Adversarial, TermsAndClamping) {
  const auto t = losses::adversarial_terms(0.8, 0.3);
  EXPECT_NEAR(t.gen_term, 1.0 - std::log(0.3), 1e-15);
  EXPECT_NEAR(t.disc_loss, -std::log(0.8) - std::log(0.7), 1e-15);
  const auto sat = losses::adversarial_terms(1.0, 0.0);
  EXPECT_TRUE(std::isfinite(sat.gen_term));
  EXPECT_TRUE(std::isfinite(sat.disc_loss));
  EXPECT_NEAR(sat.gen_term, 1.0 - std::log(kProbClamp), 1e-9);
  EXPECT_EQ(losses::net_generator_loss(1.0, 2.0, 3.0), 6.0);
}

TEST(Adversarial, BatchVersionsMatchScalar) {
  ad::Tape t(false);
  const Matrix real{{0.8}, {0.6}}, fake{{0.3}, {0.1}};
  const double g = losses::generator_adversarial_term(t.constant(fake)).value()(0, 0);
  const double d = losses::discriminator_loss(t.constant(real), t.constant(fake)).value()(0, 0);
  const auto a = losses::adversarial_terms(0.8, 0.3), b = losses::adversarial_terms(0.6, 0.1);
  EXPECT_NEAR(g, (a.gen_term + b.gen_term) / 2, 1e-15);
  EXPECT_NEAR(d, (a.disc_loss + b.disc_loss) / 2, 1e-15);
}

TEST(Adversarial, GradientCheck) {
  Rng rng = make_rng(5);
  nn::Parameter logits("z", testing::random_matrix(rng, 4, 1));
  nn::Parameter other("y", testing::random_matrix(rng, 4, 1));
  const auto r = testing::grad_check({&logits, &other}, [&](ad::Tape& t) {
    const ad::Var f = ad::sigmoid(t.parameter(logits));
    const ad::Var real = ad::sigmoid(t.parameter(other));
    return ad::add(losses::generator_adversarial_term(f), losses::discriminator_loss(real, f));
  });
  EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(BinaryCrossEntropy, ValueAndGradient) {
  ad::Tape t(false);
  const double v =
      losses::binary_cross_entropy(t.constant(Matrix{{0.9}, {0.2}}), {1.0, 0.0}).value()(0, 0);
  EXPECT_NEAR(v, -(std::log(0.9) + std::log(0.8)) / 2, 1e-15);
  EXPECT_THROW(losses::binary_cross_entropy(t.constant(Matrix{{0.9}}), {1.0, 0.0}), ShapeError);
  Rng rng = make_rng(6);
  nn::Parameter z("z", testing::random_matrix(rng, 5, 1));
  const auto r = testing::grad_check({&z}, [&](ad::Tape& tp) {
    return losses::binary_cross_entropy(ad::sigmoid(tp.parameter(z)), {1, 0, 0, 1, 1});
  });
  EXPECT_LT(r.max_rel_error, 1e-6);
}

}  // namespace
}  // namespace scanpath
