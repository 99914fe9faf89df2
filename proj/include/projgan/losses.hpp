#pragma once

#include <torch/torch.h>

#include "json.hpp"

namespace projgan {

struct LossWeights {
  double lambda1 = 10.0;  // voxel L1
  double lambda2 = 10.0;  // projection L1
  double alpha = 5.0;     // vessel-segmentation guidance
  double beta = 5.0;      // contextual projection guidance

  void validate() const;
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

void to_json(nlohmann::json& j, const LossWeights& w);
void from_json(const nlohmann::json& j, LossWeights& w);

inline constexpr double kLogEpsilon = 1e-7;

// Volumes are [N, 1, L, W, D]; the projection averages the trailing depth axis
// and returns [N, 1, L, W].
torch::Tensor project_depth(const torch::Tensor& volume);

// Mean (not sum) of |a - b|; throws on shape mismatch.
torch::Tensor l1_mean(const torch::Tensor& a, const torch::Tensor& b);

// -mean(log real) - mean(log(1 - fake)).
torch::Tensor discriminator_step_loss(const torch::Tensor& real_scores, const torch::Tensor& fake_scores);
// Non-saturating generator objective -mean(log fake).
torch::Tensor generator_adv_loss(const torch::Tensor& fake_scores);

torch::Tensor loss_l1_3d(const torch::Tensor& target, const torch::Tensor& translated);
torch::Tensor loss_l1_2d(const torch::Tensor& target, const torch::Tensor& translated);
// y_prime comes from the frozen 2D translator applied to the projected input.
torch::Tensor loss_hcg(const torch::Tensor& y_prime, const torch::Tensor& translated);
// Both logit maps come from the same frozen segmenter. With on_probabilities
// the comparison happens after a sigmoid instead of on raw logits.
torch::Tensor loss_vpg(const torch::Tensor& translated_logits, const torch::Tensor& target_logits,
                       bool on_probabilities = false);

template <class T>
struct GeneratorLossTerms {
  T adv3d{};
  T adv2d{};
  T l1_3d{};
  T l1_2d{};
  T vpg{};
  T hcg{};
};

template <class T>
T total_generator_loss(const GeneratorLossTerms<T>& t, const LossWeights& w) {
  return t.adv3d + t.adv2d + w.lambda1 * t.l1_3d + w.lambda2 * t.l1_2d + w.alpha * t.vpg + w.beta * t.hcg;
}

}  // namespace projgan
