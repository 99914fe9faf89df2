#include "projgan/losses.hpp"

#include "projgan/error.hpp"
#include "projgan/json_util.hpp"

namespace projgan {

void LossWeights::validate() const {
  for (double v : {lambda1, lambda2, alpha, beta}) {
    if (!(v >= 0.0)) throw Error(ErrorKind::Config, "loss weights must be non-negative");
  }
}

void to_json(nlohmann::json& j, const LossWeights& w) {
  j = nlohmann::json{{"lambda1", w.lambda1}, {"lambda2", w.lambda2}, {"alpha", w.alpha}, {"beta", w.beta}};
}

void from_json(const nlohmann::json& j, LossWeights& w) {
  StrictObject o(j, "weights");
  o.get("lambda1", w.lambda1);
  o.get("lambda2", w.lambda2);
  o.get("alpha", w.alpha);
  o.get("beta", w.beta);
  o.finish();
  w.validate();
}

namespace {

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (a.sizes() != b.sizes()) {
    throw Error(ErrorKind::Shape, std::string(what) + ": shape mismatch");
  }
}

}  // namespace

torch::Tensor project_depth(const torch::Tensor& volume) {
  if (volume.dim() != 5) throw Error(ErrorKind::Shape, "project_depth expects [N, C, L, W, D]");
  return volume.mean(-1);
}

torch::Tensor l1_mean(const torch::Tensor& a, const torch::Tensor& b) {
  require_same_shape(a, b, "l1_mean");
  return (a - b).abs().mean();
}

torch::Tensor discriminator_step_loss(const torch::Tensor& real_scores, const torch::Tensor& fake_scores) {
  return -torch::log(real_scores + kLogEpsilon).mean() - torch::log(1.0 - fake_scores + kLogEpsilon).mean();
}

torch::Tensor generator_adv_loss(const torch::Tensor& fake_scores) {
  return -torch::log(fake_scores + kLogEpsilon).mean();
}

torch::Tensor loss_l1_3d(const torch::Tensor& target, const torch::Tensor& translated) {
  return l1_mean(target, translated);
}

torch::Tensor loss_l1_2d(const torch::Tensor& target, const torch::Tensor& translated) {
  require_same_shape(target, translated, "loss_l1_2d");
  return l1_mean(project_depth(target), project_depth(translated));
}

torch::Tensor loss_hcg(const torch::Tensor& y_prime, const torch::Tensor& translated) {
  return l1_mean(y_prime, project_depth(translated));
}

torch::Tensor loss_vpg(const torch::Tensor& translated_logits, const torch::Tensor& target_logits,
                       bool on_probabilities) {
  if (on_probabilities) return l1_mean(torch::sigmoid(translated_logits), torch::sigmoid(target_logits));
  return l1_mean(translated_logits, target_logits);
}

}  // namespace projgan
