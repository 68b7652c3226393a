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

#include "scanpath/losses.hpp"

#include <algorithm>
#include <cmath>

#include "scanpath/autograd/ops.hpp"
#include "scanpath/core/error.hpp"

namespace scanpath {

void LossWeights::validate() const {
  if (alpha < 0 || beta < 0 || gamma < 0 || (alpha == 0 && beta == 0 && gamma == 0))
    throw ValidationError("loss weights must be non-negative with at least one positive");
}

namespace losses {

double scanpath_content_loss(const Matrix& gen_steps, const NormalizedScanpath& real,
                             const LossWeights& w) {
  const std::size_t k = real.true_length;
  if (k == 0) throw ValidationError("scanpath content loss: real scanpath has length 0");
  if (gen_steps.cols() != 3 || gen_steps.rows() < k || real.steps.rows() < k)
    throw ShapeError("scanpath content loss: step shapes do not cover the real length");
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double dp = gen_steps(i, 0) - real.steps(i, 0);
    const double dd = gen_steps(i, 1) - real.steps(i, 1);
    const double de = gen_steps(i, 2) - real.steps(i, 2);
    s += w.alpha * dp * dp + w.beta * dd * dd + w.gamma * de * de;
  }
  return s / static_cast<double>(k);
}

double text_content_loss(const Matrix& cls_recon, const Matrix& cls_real) {
  if (cls_recon.size() != cls_real.size() || cls_real.size() == 0)
    throw ShapeError("text content loss: CLS sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < cls_real.size(); ++i) {
    const double d = cls_recon[i] - cls_real[i];
    s += d * d;
  }
  return s / static_cast<double>(cls_real.size());
}

AdversarialTerms adversarial_terms(double d_real, double d_fake) {
  const double r = std::clamp(d_real, kProbClamp, 1.0 - kProbClamp);
  const double f = std::clamp(d_fake, kProbClamp, 1.0 - kProbClamp);
  return {1.0 - std::log(f), -std::log(r) - std::log(1.0 - f)};
}

double net_generator_loss(double ls, double lr, double gen_term) { return ls + lr + gen_term; }

ad::Var scanpath_content_loss(ad::Var gen_steps,
                              std::span<const NormalizedScanpath* const> targets,
                              const LossWeights& w) {
  const std::size_t n = targets.size();
  if (n == 0 || gen_steps.rows() % n != 0 || gen_steps.cols() != 3)
    throw ShapeError("scanpath content loss: batch shape mismatch");
  const std::size_t horizon = gen_steps.rows() / n;
  Matrix real(n * horizon, 3);
  Matrix weight(n * horizon, 3);
  const double per_sample = 1.0 / static_cast<double>(n);
  for (std::size_t b = 0; b < n; ++b) {
    const NormalizedScanpath& t = *targets[b];
    const std::size_t k = t.true_length;
    if (k == 0) throw ValidationError("scanpath content loss: real scanpath has length 0");
    if (t.steps.rows() != horizon || k > horizon)
      throw ShapeError("scanpath content loss: target horizon mismatch");
    const double inv_k = per_sample / static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t c = 0; c < 3; ++c) real(b * horizon + i, c) = t.steps(i, c);
      weight(b * horizon + i, 0) = w.alpha * inv_k;
      weight(b * horizon + i, 1) = w.beta * inv_k;
      weight(b * horizon + i, 2) = w.gamma * inv_k;
    }
  }
  ad::Tape& tape = gen_steps.tape();
  ad::Var diff = ad::sub(gen_steps, tape.constant(std::move(real)));
  return ad::sum(ad::mul_const(ad::square(diff), weight));
}

ad::Var text_content_loss(ad::Var cls_recon, const Matrix& cls_real) {
  if (!cls_recon.value().same_shape(cls_real))
    throw ShapeError("text content loss: CLS batch shape mismatch");
  ad::Var diff = ad::sub(cls_recon, cls_recon.tape().constant(cls_real));
  // Mean over dimensions, then over the batch.
  return ad::mean(ad::square(diff));
}

ad::Var generator_adversarial_term(ad::Var d_fake) {
  ad::Var logd = ad::log(ad::clamp(d_fake, kProbClamp, 1.0 - kProbClamp));
  return ad::add_scalar(ad::scale(ad::mean(logd), -1.0), 1.0);
}

ad::Var discriminator_loss(ad::Var d_real, ad::Var d_fake) {
  ad::Var lr = ad::log(ad::clamp(d_real, kProbClamp, 1.0 - kProbClamp));
  ad::Var one_minus =
      ad::add_scalar(ad::scale(ad::clamp(d_fake, kProbClamp, 1.0 - kProbClamp), -1.0), 1.0);
  ad::Var lf = ad::log(one_minus);
  return ad::scale(ad::add(ad::mean(lr), ad::mean(lf)), -1.0);
}

ad::Var binary_cross_entropy(ad::Var prob, const std::vector<double>& labels) {
  if (prob.cols() != 1 || prob.rows() != labels.size())
    throw ShapeError("binary cross-entropy: label count mismatch");
  ad::Var p = ad::clamp(prob, kProbClamp, 1.0 - kProbClamp);
  Matrix y(labels.size(), 1), not_y(labels.size(), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y[i] = labels[i];
    not_y[i] = 1.0 - labels[i];
  }
  ad::Var pos = ad::mul_const(ad::log(p), y);
  ad::Var neg = ad::mul_const(ad::log(ad::add_scalar(ad::scale(p, -1.0), 1.0)), not_y);
  return ad::scale(ad::mean(ad::add(pos, neg)), -1.0);
}

}  // namespace losses
}  // namespace scanpath
