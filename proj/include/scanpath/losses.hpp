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

#pragma once

#include <span>
#include <vector>

#include "scanpath/autograd/tape.hpp"
#include "scanpath/corpus.hpp"

namespace scanpath {

// Weights of the position, duration and end-of-sequence terms of the
// scanpath content loss.
struct LossWeights {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;

  void validate() const;
};

inline constexpr double kProbClamp = 1e-7;

namespace losses {

// Scalar reference versions.
//
// (1/k) * sum_{i<k} [alpha (pos_g - pos_r)^2 + beta (dur_g - dur_r)^2 +
// gamma (eos_g - eos_r)^2] with k = real.true_length; steps at or past k are
// ignored.
double scanpath_content_loss(const Matrix& gen_steps, const NormalizedScanpath& real,
                             const LossWeights& w);
// Mean squared difference over the CLS dimensions.
double text_content_loss(const Matrix& cls_recon, const Matrix& cls_real);

struct AdversarialTerms {
  double gen_term = 0.0;   // 1 - ln D(fake)
  double disc_loss = 0.0;  // -ln D(real) - ln(1 - D(fake))
};
// Probabilities are clamped to [1e-7, 1 - 1e-7] first.
AdversarialTerms adversarial_terms(double d_real, double d_fake);
// Lg = Ls + Lr + gen_term.
double net_generator_loss(double ls, double lr, double gen_term);

// Differentiable batch versions; each returns a 1x1 mean over the batch.
//
// `gen_steps` is sample-major (N * T) x 3, `targets[n]` supplies the real
// scanpath of sample n.
ad::Var scanpath_content_loss(ad::Var gen_steps, std::span<const NormalizedScanpath* const> targets,
                              const LossWeights& w);
ad::Var text_content_loss(ad::Var cls_recon, const Matrix& cls_real);
ad::Var generator_adversarial_term(ad::Var d_fake);
ad::Var discriminator_loss(ad::Var d_real, ad::Var d_fake);
// Binary cross-entropy of N x 1 probabilities against 0/1 labels.
ad::Var binary_cross_entropy(ad::Var prob, const std::vector<double>& labels);

}  // namespace losses
}  // namespace scanpath
