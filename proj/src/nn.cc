/*
 * Copyright 2026 The kdbias Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "kdbias/nn.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "kdbias/common.h"
#include "kdbias/io.h"

namespace kdbias {
namespace {

constexpr char kCheckpointMagic[8] = {'K', 'D', 'B', 'M', 'O', 'D', 'L', '1'};
constexpr uint32_t kCheckpointVersion = 1;

double log_sum_exp_scaled(std::span<const double> z, double inv_t) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : z) m = std::max(m, v * inv_t);
  double s = 0.0;
  for (double v : z) s += std::exp(v * inv_t - m);
  return m + std::log(s);
}

std::vector<Layer> bind_layers(const Architecture& arch, const InputShape& input) {
  if (arch.layers.empty()) throw ValidationError("architecture has no layers");
  if (input.height <= 0 || input.width <= 0 || input.channels <= 0) {
    throw ValidationError("input shape must be positive");
  }
  std::vector<Layer> layers;
  int c = input.channels, h = input.height, w = input.width;
  size_t offset = 0;
  bool seen_dense = false;
  for (const auto& spec : arch.layers) {
    if (spec.outputs <= 0) throw ValidationError("layer outputs must be positive");
    Layer l;
    l.spec = spec;
    if (spec.kind == LayerKind::kConv) {
      if (seen_dense) throw ValidationError("conv layer after dense layer");
      if (spec.kernel <= 0 || spec.stride <= 0 || spec.padding < 0) {
        throw ValidationError("bad conv geometry");
      }
      l.in_c = c;
      l.in_h = h;
      l.in_w = w;
      l.out_c = spec.outputs;
      l.out_h = (h + 2 * spec.padding - spec.kernel) / spec.stride + 1;
      l.out_w = (w + 2 * spec.padding - spec.kernel) / spec.stride + 1;
      if (l.out_h <= 0 || l.out_w <= 0) throw ValidationError("conv output is empty");
    } else if (spec.kind == LayerKind::kDense) {
      seen_dense = true;
      l.in_c = c * h * w;
      l.out_c = spec.outputs;
    } else {
      throw ValidationError("unknown layer kind");
    }
    l.weight_offset = offset;
    offset += l.weight_count();
    l.bias_offset = offset;
    offset += static_cast<size_t>(l.out_c);
    c = l.out_c;
    h = l.out_h;
    w = l.out_w;
    layers.push_back(l);
  }
  if (arch.layers.back().kind != LayerKind::kDense) {
    throw ValidationError("the final layer must be dense");
  }
  return layers;
}

size_t param_count(const std::vector<Layer>& layers) {
  return layers.empty() ? 0 : layers.back().bias_offset + layers.back().out_c;
}

// HWC -> CHW.
void to_chw(const InputShape& s, std::span<const double> hwc, std::vector<double>& chw) {
  chw.resize(s.size());
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x)
      for (int c = 0; c < s.channels; ++c)
        chw[(static_cast<size_t>(c) * s.height + y) * s.width + x] =
            hwc[(static_cast<size_t>(y) * s.width + x) * s.channels + c];
}

void conv_forward(const Layer& l, const double* w, const double* b, const double* in,
                  double* out) {
  const int k = l.spec.kernel, stride = l.spec.stride, pad = l.spec.padding;
  for (int oc = 0; oc < l.out_c; ++oc) {
    for (int oy = 0; oy < l.out_h; ++oy) {
      for (int ox = 0; ox < l.out_w; ++ox) {
        double s = b[oc];
        for (int ic = 0; ic < l.in_c; ++ic) {
          const double* wk = w + (static_cast<size_t>(oc) * l.in_c + ic) * k * k;
          const double* plane = in + static_cast<size_t>(ic) * l.in_h * l.in_w;
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= l.in_h) continue;
            const double* row = plane + static_cast<size_t>(iy) * l.in_w;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= l.in_w) continue;
              s += wk[ky * k + kx] * row[ix];
            }
          }
        }
        out[(static_cast<size_t>(oc) * l.out_h + oy) * l.out_w + ox] = s;
      }
    }
  }
}

// Accumulates weight/bias gradients; writes d_in when it is non-null.
void conv_backward(const Layer& l, const double* w, const double* in, const double* d_out,
                   double* gw, double* gb, double* d_in) {
  const int k = l.spec.kernel, stride = l.spec.stride, pad = l.spec.padding;
  if (d_in) std::fill(d_in, d_in + l.in_size(), 0.0);
  for (int oc = 0; oc < l.out_c; ++oc) {
    for (int oy = 0; oy < l.out_h; ++oy) {
      for (int ox = 0; ox < l.out_w; ++ox) {
        const double d = d_out[(static_cast<size_t>(oc) * l.out_h + oy) * l.out_w + ox];
        if (d == 0.0) continue;
        gb[oc] += d;
        for (int ic = 0; ic < l.in_c; ++ic) {
          const size_t wbase = (static_cast<size_t>(oc) * l.in_c + ic) * k * k;
          const size_t pbase = static_cast<size_t>(ic) * l.in_h * l.in_w;
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= l.in_h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= l.in_w) continue;
              const size_t p = pbase + static_cast<size_t>(iy) * l.in_w + ix;
              gw[wbase + ky * k + kx] += d * in[p];
              if (d_in) d_in[p] += d * w[wbase + ky * k + kx];
            }
          }
        }
      }
    }
  }
}

void dense_forward(const Layer& l, const double* w, const double* b, const double* in,
                   double* out) {
  const size_t n_in = static_cast<size_t>(l.in_c);
  for (int o = 0; o < l.out_c; ++o) {
    const double* row = w + static_cast<size_t>(o) * n_in;
    double s = b[o];
    for (size_t i = 0; i < n_in; ++i) s += row[i] * in[i];
    out[o] = s;
  }
}

void dense_backward(const Layer& l, const double* w, const double* in, const double* d_out,
                    double* gw, double* gb, double* d_in) {
  const size_t n_in = static_cast<size_t>(l.in_c);
  if (d_in) std::fill(d_in, d_in + n_in, 0.0);
  for (int o = 0; o < l.out_c; ++o) {
    const double d = d_out[o];
    if (d == 0.0) continue;
    gb[o] += d;
    double* grow = gw + static_cast<size_t>(o) * n_in;
    const double* wrow = w + static_cast<size_t>(o) * n_in;
    for (size_t i = 0; i < n_in; ++i) grow[i] += d * in[i];
    if (d_in) {
      for (size_t i = 0; i < n_in; ++i) d_in[i] += d * wrow[i];
    }
  }
}

// Per-example activations: acts[0] is the CHW input, acts[l + 1] the output
// of layer l (post-ReLU except for the logits).
struct Trace {
  std::vector<std::vector<double>> acts;
};

void run_forward(const ModelParams& p, std::span<const double> pixels, Trace& t) {
  if (pixels.size() != p.input.size()) {
    throw ValidationError("input has " + std::to_string(pixels.size()) + " values, expected " +
                          std::to_string(p.input.size()));
  }
  t.acts.resize(p.layers.size() + 1);
  to_chw(p.input, pixels, t.acts[0]);
  for (size_t i = 0; i < p.layers.size(); ++i) {
    const Layer& l = p.layers[i];
    auto& out = t.acts[i + 1];
    out.resize(l.out_size());
    const double* w = p.values.data() + l.weight_offset;
    const double* b = p.values.data() + l.bias_offset;
    if (l.spec.kind == LayerKind::kConv) {
      conv_forward(l, w, b, t.acts[i].data(), out.data());
    } else {
      dense_forward(l, w, b, t.acts[i].data(), out.data());
    }
    if (i + 1 < p.layers.size()) {
      for (double& v : out) v = v > 0.0 ? v : 0.0;
    }
  }
}

// Loss of one example and its gradient with respect to the logits.
double example_loss(std::span<const double> z, const BatchItem& item, const LossSpec& loss,
                    std::vector<double>* dz) {
  const size_t k = z.size();
  if (item.label < 0 || static_cast<size_t>(item.label) >= k) {
    throw ValidationError("label " + std::to_string(item.label) + " out of range");
  }
  const double lse1 = log_sum_exp_scaled(z, 1.0);
  const double hard = lse1 - z[item.label];
  if (loss.mode == LossMode::kHardOnly) {
    if (dz) {
      dz->resize(k);
      for (size_t i = 0; i < k; ++i) (*dz)[i] = std::exp(z[i] - lse1);
      (*dz)[item.label] -= 1.0;
    }
    return hard;
  }
  if (item.teacher_probs.size() != k) {
    throw ValidationError("distillation needs teacher probabilities for every class");
  }
  const double t = loss.temperature;
  const double inv_t = 1.0 / t;
  const double lse_t = log_sum_exp_scaled(z, inv_t);
  double soft = 0.0;
  for (size_t i = 0; i < k; ++i) {
    if (item.teacher_probs[i] != 0.0) soft -= item.teacher_probs[i] * (z[i] * inv_t - lse_t);
  }
  if (dz) {
    const double scale = loss.t_squared_scaling ? t * t : 1.0;
    const double w_soft = loss.alpha * scale;
    const double w_hard = 1.0 - loss.alpha;
    dz->resize(k);
    for (size_t i = 0; i < k; ++i) {
      const double q_t = std::exp(z[i] * inv_t - lse_t);
      const double q_1 = std::exp(z[i] - lse1);
      const double d_soft = (q_t - item.teacher_probs[i]) * inv_t;
      const double d_hard = q_1 - (static_cast<int>(i) == item.label ? 1.0 : 0.0);
      (*dz)[i] = w_soft * d_soft + w_hard * d_hard;
    }
  }
  return total_loss(loss.alpha, soft, hard, t, loss.t_squared_scaling);
}

void check_loss_spec(const LossSpec& loss) {
  if (loss.mode == LossMode::kDistill) {
    if (!(loss.temperature > 0.0)) throw ValidationError("temperature must be > 0");
    if (!(loss.alpha >= 0.0 && loss.alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
  }
}

}  // namespace

Architecture teacher_architecture(int num_classes, int hidden) {
  return {{{LayerKind::kConv, 8, 3, 1, 1},
           {LayerKind::kConv, 16, 3, 2, 1},
           {LayerKind::kDense, hidden},
           {LayerKind::kDense, num_classes}}};
}

Architecture student_architecture(int num_classes, int hidden) {
  return {{{LayerKind::kDense, hidden}, {LayerKind::kDense, num_classes}}};
}

size_t Layer::weight_count() const {
  if (spec.kind == LayerKind::kConv) {
    return static_cast<size_t>(out_c) * in_c * spec.kernel * spec.kernel;
  }
  return static_cast<size_t>(out_c) * in_c;
}

Architecture ModelParams::architecture() const {
  Architecture a;
  for (const auto& l : layers) a.layers.push_back(l.spec);
  return a;
}

uint64_t ModelParams::checksum() const {
  return fnv1a(values.data(), values.size() * sizeof(double));
}

void ModelParams::validate() const {
  const auto expected = bind_layers(architecture(), input);
  if (expected.size() != layers.size() || param_count(expected) != values.size()) {
    throw ValidationError("model parameter shapes do not chain");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("model has non-finite parameters");
  }
}

ModelParams init_params(const Architecture& arch, const InputShape& input, uint64_t seed) {
  ModelParams p;
  p.input = input;
  p.layers = bind_layers(arch, input);
  p.values.assign(param_count(p.layers), 0.0);
  Rng rng(seed);
  for (const auto& l : p.layers) {
    const size_t fan_in = l.weight_count() / static_cast<size_t>(l.out_c);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (size_t i = 0; i < l.weight_count(); ++i) {
      p.values[l.weight_offset + i] = rng.uniform(-bound, bound);
    }
  }
  return p;
}

std::vector<double> softmax_t(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) throw ValidationError("softmax_t: temperature must be > 0");
  if (logits.empty()) throw ValidationError("softmax_t: empty logits");
  for (double z : logits) {
    if (!std::isfinite(z)) throw ValidationError("softmax_t: non-finite logit");
  }
  const double inv_t = 1.0 / temperature;
  double m = -std::numeric_limits<double>::infinity();
  for (double z : logits) m = std::max(m, z * inv_t);
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] * inv_t - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double cross_entropy_hard(std::span<const double> logits, int label) {
  if (label < 0 || static_cast<size_t>(label) >= logits.size()) {
    throw ValidationError("cross_entropy_hard: label out of range");
  }
  return log_sum_exp_scaled(logits, 1.0) - logits[label];
}

double cross_entropy_soft(std::span<const double> student_logits,
                          std::span<const double> teacher_probs, double temperature) {
  if (!(temperature > 0.0)) throw ValidationError("cross_entropy_soft: temperature must be > 0");
  if (student_logits.size() != teacher_probs.size()) {
    throw ValidationError("cross_entropy_soft: size mismatch");
  }
  const double inv_t = 1.0 / temperature;
  const double lse = log_sum_exp_scaled(student_logits, inv_t);
  double ce = 0.0;
  for (size_t i = 0; i < student_logits.size(); ++i) {
    if (teacher_probs[i] != 0.0) ce -= teacher_probs[i] * (student_logits[i] * inv_t - lse);
  }
  return ce;
}

double total_loss(double alpha, double distill_loss, double classification_loss,
                  double temperature, bool t_squared_scaling) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("total_loss: alpha must lie in [0, 1]");
  const double s = t_squared_scaling ? temperature * temperature : 1.0;
  return alpha * s * distill_loss + (1.0 - alpha) * classification_loss;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs: must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size: must be >= 1");
  if (!(base_lr > 0.0)) throw ValidationError("base_lr: must be > 0");
  if (!(lr_drop_factor > 0.0)) throw ValidationError("lr_drop_factor: must be > 0");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay: must be >= 0");
  if (!(temperature >= 1.0)) throw ValidationError("temperature: must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha: must lie in [0, 1]");
}

std::vector<double> forward(const ModelParams& params, std::span<const double> pixels) {
  Trace t;
  run_forward(params, pixels, t);
  return std::move(t.acts.back());
}

std::vector<double> forward_batch(const ModelParams& params, std::span<const BatchItem> batch) {
  const size_t k = static_cast<size_t>(params.num_classes());
  std::vector<double> out(batch.size() * k);
  Trace t;
  for (size_t b = 0; b < batch.size(); ++b) {
    run_forward(params, batch[b].pixels, t);
    std::copy(t.acts.back().begin(), t.acts.back().end(), out.begin() + b * k);
  }
  return out;
}

double backward(const ModelParams& params, std::span<const BatchItem> batch,
                const LossSpec& loss, std::vector<double>& gradients) {
  check_loss_spec(loss);
  if (batch.empty()) throw ValidationError("backward: empty batch");
  gradients.assign(params.values.size(), 0.0);
  Trace t;
  std::vector<double> delta, delta_prev;
  double total = 0.0;
  const size_t n = params.layers.size();
  for (const auto& item : batch) {
    run_forward(params, item.pixels, t);
    total += example_loss(t.acts.back(), item, loss, &delta);
    for (size_t i = n; i-- > 0;) {
      const Layer& l = params.layers[i];
      const double* w = params.values.data() + l.weight_offset;
      double* gw = gradients.data() + l.weight_offset;
      double* gb = gradients.data() + l.bias_offset;
      double* d_in = nullptr;
      if (i > 0) {
        delta_prev.resize(l.in_size());
        d_in = delta_prev.data();
      }
      if (l.spec.kind == LayerKind::kConv) {
        conv_backward(l, w, t.acts[i].data(), delta.data(), gw, gb, d_in);
      } else {
        dense_backward(l, w, t.acts[i].data(), delta.data(), gw, gb, d_in);
      }
      if (i > 0) {
        // ReLU derivative at the previous layer's output.
        const auto& a = t.acts[i];
        for (size_t j = 0; j < delta_prev.size(); ++j) {
          if (a[j] <= 0.0) delta_prev[j] = 0.0;
        }
        std::swap(delta, delta_prev);
      }
    }
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (double& g : gradients) g *= inv_b;
  return total * inv_b;
}

double batch_loss(const ModelParams& params, std::span<const BatchItem> batch,
                  const LossSpec& loss) {
  check_loss_spec(loss);
  if (batch.empty()) throw ValidationError("batch_loss: empty batch");
  Trace t;
  double total = 0.0;
  for (const auto& item : batch) {
    run_forward(params, item.pixels, t);
    total += example_loss(t.acts.back(), item, loss, nullptr);
  }
  return total / static_cast<double>(batch.size());
}

double learning_rate(int epoch, const TrainConfig& cfg) {
  int drops = 0;
  for (int e : cfg.lr_drop_epochs) drops += e <= epoch;
  return cfg.base_lr / std::pow(cfg.lr_drop_factor, drops);
}

void sgd_step(ModelParams& params, std::span<const double> gradients, int epoch,
              const TrainConfig& cfg) {
  if (gradients.size() != params.values.size()) throw ValidationError("sgd_step: size mismatch");
  const double lr = learning_rate(epoch, cfg);
  for (size_t i = 0; i < gradients.size(); ++i) {
    double& w = params.values[i];
    w -= lr * (gradients[i] + cfg.weight_decay * w);
  }
}

int argmax(std::span<const double> logits) {
  int best = 0;
  for (size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = static_cast<int>(i);
  }
  return best;
}

int predict(const ModelParams& params, std::span<const double> pixels) {
  return argmax(forward(params, pixels));
}

std::string serialize_params(const ModelParams& params) {
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  auto u32 = [&out](uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  auto u64 = [&out](uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  u32(kCheckpointVersion);
  u32(static_cast<uint32_t>(params.input.height));
  u32(static_cast<uint32_t>(params.input.width));
  u32(static_cast<uint32_t>(params.input.channels));
  u32(static_cast<uint32_t>(params.layers.size()));
  for (const auto& l : params.layers) {
    u32(static_cast<uint32_t>(l.spec.kind));
    u32(static_cast<uint32_t>(l.spec.outputs));
    u32(static_cast<uint32_t>(l.spec.kernel));
    u32(static_cast<uint32_t>(l.spec.stride));
    u32(static_cast<uint32_t>(l.spec.padding));
  }
  u64(params.values.size());
  for (double v : params.values) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    u64(bits);
  }
  return out;
}

ModelParams deserialize_params(const std::string& bytes) {
  size_t pos = 0;
  auto need = [&](size_t n) {
    if (pos + n > bytes.size()) throw SchemaError("checkpoint truncated");
  };
  auto u32 = [&]() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * i);
    return v;
  };
  auto u64 = [&]() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * i);
    return v;
  };
  need(sizeof(kCheckpointMagic));
  if (std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw SchemaError("checkpoint: bad magic");
  }
  pos = sizeof(kCheckpointMagic);
  if (u32() != kCheckpointVersion) throw SchemaError("checkpoint: unsupported version");
  InputShape input;
  input.height = static_cast<int>(u32());
  input.width = static_cast<int>(u32());
  input.channels = static_cast<int>(u32());
  const uint32_t n_layers = u32();
  Architecture arch;
  for (uint32_t i = 0; i < n_layers; ++i) {
    LayerSpec s;
    const uint32_t kind = u32();
    if (kind != static_cast<uint32_t>(LayerKind::kConv) &&
        kind != static_cast<uint32_t>(LayerKind::kDense)) {
      throw SchemaError("checkpoint: unknown layer kind");
    }
    s.kind = static_cast<LayerKind>(kind);
    s.outputs = static_cast<int>(u32());
    s.kernel = static_cast<int>(u32());
    s.stride = static_cast<int>(u32());
    s.padding = static_cast<int>(u32());
    arch.layers.push_back(s);
  }
  ModelParams p;
  p.input = input;
  p.layers = bind_layers(arch, input);
  const uint64_t count = u64();
  if (count != param_count(p.layers)) throw SchemaError("checkpoint: parameter count mismatch");
  p.values.resize(count);
  for (double& v : p.values) {
    const uint64_t bits = u64();
    std::memcpy(&v, &bits, sizeof(v));
  }
  if (pos != bytes.size()) throw SchemaError("checkpoint: trailing bytes");
  return p;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_params(params));
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  return deserialize_params(io::read_file(path));
}

}  // namespace kdbias
