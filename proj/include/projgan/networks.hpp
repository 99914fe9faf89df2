#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace projgan {

enum class Norm { None, Instance };

struct GeneratorSpec {
  int dims = 3;
  int in_channels = 1;
  int out_channels = 1;
  int base_channels = 16;
  int n_downsamples = 3;
  bool skip_connections = true;
  Norm norm = Norm::Instance;
  // Sigmoid head maps onto [0, 1]; segmenters leave the head as raw logits.
  bool squash_output = true;

  void validate() const;
  friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

struct DiscriminatorSpec {
  int dims = 3;
  int in_channels = 1;
  int base_channels = 16;
  int n_strided_layers = 2;
  // Conditional discriminators see the source image stacked as an extra channel.
  bool conditional = false;

  void validate() const;
  friend bool operator==(const DiscriminatorSpec&, const DiscriminatorSpec&) = default;
};

struct SegmenterSpec {
  int base_channels = 16;
  int n_downsamples = 3;
  Norm norm = Norm::Instance;

  GeneratorSpec as_unet() const;
  friend bool operator==(const SegmenterSpec&, const SegmenterSpec&) = default;
};

void to_json(nlohmann::json& j, const GeneratorSpec& s);
void from_json(const nlohmann::json& j, GeneratorSpec& s);
void to_json(nlohmann::json& j, const DiscriminatorSpec& s);
void from_json(const nlohmann::json& j, DiscriminatorSpec& s);
void to_json(nlohmann::json& j, const SegmenterSpec& s);
void from_json(const nlohmann::json& j, SegmenterSpec& s);

// Convolution over 2 or 3 spatial dims with explicitly registered parameters.
class ConvNdImpl : public torch::nn::Module {
 public:
  ConvNdImpl(int dims, int in_channels, int out_channels, int kernel, int stride, int padding);
  torch::Tensor forward(const torch::Tensor& x);

  torch::Tensor weight;
  torch::Tensor bias;

 private:
  int dims_;
  int stride_;
  int padding_;
};
TORCH_MODULE(ConvNd);

// UNet encoder/decoder. Input is [N, C, *spatial]; every spatial extent must
// be divisible by 2^n_downsamples.
class UNetImpl : public torch::nn::Module {
 public:
  explicit UNetImpl(GeneratorSpec spec);
  torch::Tensor forward(const torch::Tensor& x);
  const GeneratorSpec& spec() const { return spec_; }

  // Sets the head bias so a zero pre-activation maps to probability p
  // (squashed generators only).
  void set_output_prior(double p);

 private:
  struct Block {
    ConvNd first{nullptr};
    ConvNd second{nullptr};
  };
  torch::Tensor run_block(Block& block, torch::Tensor x);

  GeneratorSpec spec_;
  std::vector<Block> encoder_;
  std::vector<Block> decoder_;
  ConvNd head_{nullptr};
};
TORCH_MODULE(UNet);

// Patch discriminator: n stride-2 convolutions then a 1-channel score head.
// Scores are squashed strictly inside (0, 1).
class PatchDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit PatchDiscriminatorImpl(DiscriminatorSpec spec);
  torch::Tensor forward(const torch::Tensor& x);
  const DiscriminatorSpec& spec() const { return spec_; }

  // Output grid for a given spatial input shape; throws on non-divisible extents.
  std::vector<int64_t> score_grid_shape(const std::vector<int64_t>& spatial) const;

 private:
  DiscriminatorSpec spec_;
  std::vector<ConvNd> strided_;
  ConvNd head_{nullptr};
};
TORCH_MODULE(PatchDiscriminator);

// Parameters are drawn from a std::mt19937_64 seeded with init_seed, not from
// the global torch generator.
UNet build_generator(const GeneratorSpec& spec, uint64_t init_seed);
PatchDiscriminator build_discriminator(const DiscriminatorSpec& spec, uint64_t init_seed);
UNet build_segmenter(const SegmenterSpec& spec, uint64_t init_seed);

void check_divisible(const std::vector<int64_t>& spatial, int levels, const char* what);

int64_t parameter_count(const torch::nn::Module& module);
// Flattened copy of all parameters (registration order) as float64.
torch::Tensor flatten_parameters(const torch::nn::Module& module);
// sha256 over the raw parameter bytes in registration order.
std::string parameter_digest(const torch::nn::Module& module);
void set_trainable(torch::nn::Module& module, bool trainable);

struct GradientProbeResult {
  double max_relative_error = 0.0;
  int64_t checked = 0;
  std::vector<double> analytic;
  std::vector<double> numeric;
};

// Compares autograd parameter gradients of loss() against central finite
// differences on up to max_samples randomly chosen trainable parameters.
// Run the module in float64 for meaningful results.
GradientProbeResult gradient_probe(torch::nn::Module& module, const std::function<torch::Tensor()>& loss,
                                   int64_t max_samples = 200, double step = 1e-5, uint64_t seed = 0,
                                   double denominator_floor = 1e-6);

}  // namespace projgan
