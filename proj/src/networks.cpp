#include "projgan/networks.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include "projgan/digest.hpp"
#include "projgan/error.hpp"
#include "projgan/json_util.hpp"

namespace projgan {
using nlohmann::json;
namespace F = torch::nn::functional;

namespace {

constexpr double kScoreMargin = 1e-6;
constexpr double kLeakySlope = 0.2;

int level_channels(int base, int level) { return base << std::min(level, 3); }

std::string norm_name(Norm n) { return n == Norm::Instance ? "instance" : "none"; }

Norm parse_norm(const std::string& s) {
  if (s == "instance") return Norm::Instance;
  if (s == "none") return Norm::None;
  throw Error(ErrorKind::Config, "norm must be 'instance' or 'none', got '" + s + "'");
}

torch::Tensor normalize(const torch::Tensor& x, Norm norm) {
  if (norm == Norm::None) return x;
  // Instance statistics are undefined on a single spatial element.
  if (x.numel() / (x.size(0) * x.size(1)) <= 1) return x;
  return F::instance_norm(x, F::InstanceNormFuncOptions().eps(1e-5));
}

torch::Tensor leaky(const torch::Tensor& x) { return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(kLeakySlope)); }

// Kaiming-normal weights (fan-in, leaky slope 0.2) and zero biases, drawn
// from a dedicated engine so initialization never touches global torch state.
void init_parameters(torch::nn::Module& module, uint64_t seed) {
  std::mt19937_64 rng(seed);
  torch::NoGradGuard no_grad;
  for (auto& p : module.named_parameters(true)) {
    auto& t = p.value();
    if (p.key().ends_with("bias")) {
      t.zero_();
      continue;
    }
    const int64_t fan_in = t.numel() / t.size(0);
    const double gain = std::sqrt(2.0 / (1.0 + kLeakySlope * kLeakySlope));
    std::normal_distribution<double> dist(0.0, gain / std::sqrt(static_cast<double>(fan_in)));
    std::vector<float> values(static_cast<size_t>(t.numel()));
    for (auto& v : values) v = static_cast<float>(dist(rng));
    t.copy_(torch::from_blob(values.data(), t.sizes(), torch::kFloat32).to(t.dtype()));
  }
}

std::vector<int64_t> spatial_of(const torch::Tensor& x) {
  return std::vector<int64_t>(x.sizes().begin() + 2, x.sizes().end());
}

}  // namespace

void GeneratorSpec::validate() const {
  if (dims != 2 && dims != 3) throw Error(ErrorKind::Config, "generator dims must be 2 or 3");
  if (in_channels < 1 || out_channels < 1) throw Error(ErrorKind::Config, "channel counts must be >= 1");
  if (base_channels < 1) throw Error(ErrorKind::Config, "base_channels must be >= 1");
  if (n_downsamples < 0 || n_downsamples > 8) throw Error(ErrorKind::Config, "n_downsamples must lie in [0, 8]");
}

void DiscriminatorSpec::validate() const {
  if (dims != 2 && dims != 3) throw Error(ErrorKind::Config, "discriminator dims must be 2 or 3");
  if (in_channels < 1) throw Error(ErrorKind::Config, "in_channels must be >= 1");
  if (base_channels < 1) throw Error(ErrorKind::Config, "base_channels must be >= 1");
  if (n_strided_layers < 1 || n_strided_layers > 8) {
    throw Error(ErrorKind::Config, "n_strided_layers must lie in [1, 8]");
  }
}

GeneratorSpec SegmenterSpec::as_unet() const {
  GeneratorSpec g;
  g.dims = 2;
  g.base_channels = base_channels;
  g.n_downsamples = n_downsamples;
  g.norm = norm;
  g.squash_output = false;
  return g;
}

void to_json(json& j, const GeneratorSpec& s) {
  j = json{{"dims", s.dims},
           {"in_channels", s.in_channels},
           {"out_channels", s.out_channels},
           {"base_channels", s.base_channels},
           {"n_downsamples", s.n_downsamples},
           {"skip_connections", s.skip_connections},
           {"norm", norm_name(s.norm)},
           {"squash_output", s.squash_output}};
}

void from_json(const json& j, GeneratorSpec& s) {
  StrictObject o(j, "generator");
  std::string norm = norm_name(s.norm);
  o.get("dims", s.dims);
  o.get("in_channels", s.in_channels);
  o.get("out_channels", s.out_channels);
  o.get("base_channels", s.base_channels);
  o.get("n_downsamples", s.n_downsamples);
  o.get("skip_connections", s.skip_connections);
  o.get("norm", norm);
  o.get("squash_output", s.squash_output);
  o.finish();
  s.norm = parse_norm(norm);
  s.validate();
}

void to_json(json& j, const DiscriminatorSpec& s) {
  j = json{{"dims", s.dims},
           {"in_channels", s.in_channels},
           {"base_channels", s.base_channels},
           {"n_strided_layers", s.n_strided_layers},
           {"conditional", s.conditional}};
}

void from_json(const json& j, DiscriminatorSpec& s) {
  StrictObject o(j, "discriminator");
  o.get("dims", s.dims);
  o.get("in_channels", s.in_channels);
  o.get("base_channels", s.base_channels);
  o.get("n_strided_layers", s.n_strided_layers);
  o.get("conditional", s.conditional);
  o.finish();
  s.validate();
}

void to_json(json& j, const SegmenterSpec& s) {
  j = json{{"base_channels", s.base_channels}, {"n_downsamples", s.n_downsamples}, {"norm", norm_name(s.norm)}};
}

void from_json(const json& j, SegmenterSpec& s) {
  StrictObject o(j, "segmenter");
  std::string norm = norm_name(s.norm);
  o.get("base_channels", s.base_channels);
  o.get("n_downsamples", s.n_downsamples);
  o.get("norm", norm);
  o.finish();
  s.norm = parse_norm(norm);
  s.as_unet().validate();
}

ConvNdImpl::ConvNdImpl(int dims, int in_channels, int out_channels, int kernel, int stride, int padding)
    : dims_(dims), stride_(stride), padding_(padding) {
  std::vector<int64_t> shape{out_channels, in_channels};
  for (int i = 0; i < dims; ++i) shape.push_back(kernel);
  weight = register_parameter("weight", torch::zeros(shape));
  bias = register_parameter("bias", torch::zeros({out_channels}));
}

torch::Tensor ConvNdImpl::forward(const torch::Tensor& x) {
  if (dims_ == 3) return torch::conv3d(x, weight, bias, stride_, padding_);
  return torch::conv2d(x, weight, bias, stride_, padding_);
}

void check_divisible(const std::vector<int64_t>& spatial, int levels, const char* what) {
  const int64_t factor = int64_t{1} << levels;
  for (int64_t extent : spatial) {
    if (extent < factor || extent % factor != 0) {
      std::string shape;
      for (size_t i = 0; i < spatial.size(); ++i) shape += (i ? "x" : "") + std::to_string(spatial[i]);
      throw Error(ErrorKind::Shape, std::string(what) + ": input " + shape + " is not divisible by " +
                                        std::to_string(factor));
    }
  }
}

UNetImpl::UNetImpl(GeneratorSpec spec) : spec_(spec) {
  spec_.validate();
  const int d = spec_.dims;
  int in = spec_.in_channels;
  for (int level = 0; level <= spec_.n_downsamples; ++level) {
    const int c = level_channels(spec_.base_channels, level);
    Block b;
    b.first = register_module("enc" + std::to_string(level) + "a", ConvNd(d, in, c, 3, 1, 1));
    b.second = register_module("enc" + std::to_string(level) + "b", ConvNd(d, c, c, 3, 1, 1));
    encoder_.push_back(b);
    in = c;
  }
  for (int level = spec_.n_downsamples - 1; level >= 0; --level) {
    const int c = level_channels(spec_.base_channels, level);
    const int below = level_channels(spec_.base_channels, level + 1);
    const int cin = below + (spec_.skip_connections ? c : 0);
    Block b;
    b.first = register_module("dec" + std::to_string(level) + "a", ConvNd(d, cin, c, 3, 1, 1));
    b.second = register_module("dec" + std::to_string(level) + "b", ConvNd(d, c, c, 3, 1, 1));
    decoder_.push_back(b);
  }
  head_ = register_module("head", ConvNd(d, level_channels(spec_.base_channels, 0), spec_.out_channels, 1, 1, 0));
}

torch::Tensor UNetImpl::run_block(Block& block, torch::Tensor x) {
  x = leaky(normalize(block.first->forward(x), spec_.norm));
  return leaky(normalize(block.second->forward(x), spec_.norm));
}

torch::Tensor UNetImpl::forward(const torch::Tensor& input) {
  if (input.dim() != spec_.dims + 2) {
    throw Error(ErrorKind::Shape, "generator expects a rank-" + std::to_string(spec_.dims + 2) + " tensor");
  }
  if (input.size(1) != spec_.in_channels) throw Error(ErrorKind::Shape, "generator input channel mismatch");
  check_divisible(spatial_of(input), spec_.n_downsamples, "generator");

  std::vector<torch::Tensor> skips;
  torch::Tensor x = input;
  for (size_t level = 0; level < encoder_.size(); ++level) {
    if (level > 0) {
      x = spec_.dims == 3 ? torch::avg_pool3d(x, 2) : torch::avg_pool2d(x, 2);
    }
    x = run_block(encoder_[level], x);
    skips.push_back(x);
  }
  for (size_t i = 0; i < decoder_.size(); ++i) {
    const torch::Tensor& skip = skips[skips.size() - 2 - i];
    const std::vector<double> scale(static_cast<size_t>(spec_.dims), 2.0);
    x = F::interpolate(x, F::InterpolateFuncOptions().scale_factor(scale).mode(torch::kNearest));
    if (spec_.skip_connections) x = torch::cat({x, skip}, 1);
    x = run_block(decoder_[i], x);
  }
  x = head_->forward(x);
  return spec_.squash_output ? torch::sigmoid(x) : x;
}

void UNetImpl::set_output_prior(double p) {
  if (!spec_.squash_output) throw Error(ErrorKind::Config, "output prior needs a squashed generator");
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::Range, "output prior must lie in (0, 1)");
  torch::NoGradGuard no_grad;
  head_->bias.fill_(std::log(p / (1.0 - p)));
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(DiscriminatorSpec spec) : spec_(spec) {
  spec_.validate();
  int in = spec_.in_channels * (spec_.conditional ? 2 : 1);
  for (int i = 0; i < spec_.n_strided_layers; ++i) {
    const int c = level_channels(spec_.base_channels, i);
    strided_.push_back(register_module("down" + std::to_string(i), ConvNd(spec_.dims, in, c, 4, 2, 1)));
    in = c;
  }
  head_ = register_module("head", ConvNd(spec_.dims, in, 1, 3, 1, 1));
}

std::vector<int64_t> PatchDiscriminatorImpl::score_grid_shape(const std::vector<int64_t>& spatial) const {
  check_divisible(spatial, spec_.n_strided_layers, "discriminator");
  std::vector<int64_t> out;
  for (int64_t s : spatial) out.push_back(s >> spec_.n_strided_layers);
  return out;
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& input) {
  if (input.dim() != spec_.dims + 2) {
    throw Error(ErrorKind::Shape, "discriminator expects a rank-" + std::to_string(spec_.dims + 2) + " tensor");
  }
  if (input.size(1) != spec_.in_channels * (spec_.conditional ? 2 : 1)) {
    throw Error(ErrorKind::Shape, "discriminator input channel mismatch");
  }
  check_divisible(spatial_of(input), spec_.n_strided_layers, "discriminator");
  torch::Tensor x = input;
  for (size_t i = 0; i < strided_.size(); ++i) {
    x = strided_[i]->forward(x);
    if (i > 0) x = normalize(x, Norm::Instance);
    x = leaky(x);
  }
  return kScoreMargin + (1.0 - 2.0 * kScoreMargin) * torch::sigmoid(head_->forward(x));
}

UNet build_generator(const GeneratorSpec& spec, uint64_t init_seed) {
  UNet net(spec);
  init_parameters(*net, init_seed);
  return net;
}

PatchDiscriminator build_discriminator(const DiscriminatorSpec& spec, uint64_t init_seed) {
  PatchDiscriminator net(spec);
  init_parameters(*net, init_seed);
  return net;
}

UNet build_segmenter(const SegmenterSpec& spec, uint64_t init_seed) {
  return build_generator(spec.as_unet(), init_seed);
}

int64_t parameter_count(const torch::nn::Module& module) {
  int64_t n = 0;
  for (const auto& p : module.parameters(true)) n += p.numel();
  return n;
}

torch::Tensor flatten_parameters(const torch::nn::Module& module) {
  std::vector<torch::Tensor> flat;
  for (const auto& p : module.parameters(true)) flat.push_back(p.detach().reshape({-1}).to(torch::kFloat64));
  if (flat.empty()) return torch::zeros({0}, torch::kFloat64);
  return torch::cat(flat);
}

std::string parameter_digest(const torch::nn::Module& module) {
  std::vector<std::byte> bytes;
  for (const auto& p : module.parameters(true)) {
    const torch::Tensor t = p.detach().contiguous().cpu();
    const auto* begin = static_cast<const std::byte*>(t.data_ptr());
    bytes.insert(bytes.end(), begin, begin + t.numel() * static_cast<int64_t>(t.element_size()));
  }
  return sha256_hex(bytes);
}

void set_trainable(torch::nn::Module& module, bool trainable) {
  for (auto& p : module.parameters(true)) p.set_requires_grad(trainable);
}

GradientProbeResult gradient_probe(torch::nn::Module& module, const std::function<torch::Tensor()>& loss,
                                   int64_t max_samples, double step, uint64_t seed, double denominator_floor) {
  std::vector<torch::Tensor> params;
  for (auto& p : module.parameters(true)) {
    if (p.requires_grad()) params.push_back(p);
  }
  for (auto& p : params) {
    if (p.grad().defined()) p.mutable_grad().zero_();
  }
  torch::Tensor value = loss();
  if (!torch::isfinite(value).all().item<bool>()) throw Error(ErrorKind::Numeric, "gradient probe: non-finite loss");
  value.backward();

  std::vector<std::pair<size_t, int64_t>> index;  // (parameter, flat offset)
  for (size_t i = 0; i < params.size(); ++i) {
    for (int64_t k = 0; k < params[i].numel(); ++k) index.emplace_back(i, k);
  }
  std::mt19937_64 rng(seed);
  const auto n = std::min<int64_t>(max_samples, static_cast<int64_t>(index.size()));
  for (int64_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<int64_t> pick(i, static_cast<int64_t>(index.size()) - 1);
    std::swap(index[static_cast<size_t>(i)], index[static_cast<size_t>(pick(rng))]);
  }

  GradientProbeResult result;
  result.checked = n;
  torch::NoGradGuard no_grad;
  for (int64_t i = 0; i < n; ++i) {
    const auto [pi, k] = index[static_cast<size_t>(i)];
    torch::Tensor flat = params[pi].detach().view({-1});
    const torch::Tensor grad = params[pi].grad();
    const double analytic = grad.defined() ? grad.reshape({-1})[k].item<double>() : 0.0;
    const double original = flat[k].item<double>();
    flat[k].fill_(original + step);
    const double up = loss().item<double>();
    flat[k].fill_(original - step);
    const double down = loss().item<double>();
    flat[k].fill_(original);
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw Error(ErrorKind::Numeric, "gradient probe: non-finite perturbed loss");
    }
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), denominator_floor});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic - numeric) / denom);
    result.analytic.push_back(analytic);
    result.numeric.push_back(numeric);
  }
  return result;
}

}  // namespace projgan
