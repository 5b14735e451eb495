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

// Small ReLU classifiers with hand-written backpropagation: an optional
// convolutional front end followed by dense layers, temperature softmax,
// hard and soft cross-entropy, the combined distillation objective and SGD
// with weight decay and a step learning-rate schedule.
//
// All parameters live in one flat vector so optimizers, checkpoints and
// finite-difference checks can treat a model as a single array.

#ifndef KDBIAS_NN_H_
#define KDBIAS_NN_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace kdbias {

enum class LayerKind : uint32_t { kConv = 1, kDense = 2 };

struct LayerSpec {
  LayerKind kind = LayerKind::kDense;
  int outputs = 0;  // output channels (conv) or units (dense)
  int kernel = 3;
  int stride = 1;
  int padding = 1;
};

struct Architecture {
  std::vector<LayerSpec> layers;  // the last layer must be dense with K outputs
};

// conv(8) + conv(16, stride 2) + dense(hidden) + dense(K).
Architecture teacher_architecture(int num_classes, int hidden = 64);
// dense(hidden) + dense(K).
Architecture student_architecture(int num_classes, int hidden = 32);

struct InputShape {
  int height = 0;
  int width = 0;
  int channels = 0;
  size_t size() const { return static_cast<size_t>(height) * width * channels; }
};

// A layer bound to concrete input/output extents and parameter offsets.
struct Layer {
  LayerSpec spec;
  int in_c = 0, in_h = 1, in_w = 1;
  int out_c = 0, out_h = 1, out_w = 1;
  size_t weight_offset = 0;
  size_t bias_offset = 0;

  size_t in_size() const { return static_cast<size_t>(in_c) * in_h * in_w; }
  size_t out_size() const { return static_cast<size_t>(out_c) * out_h * out_w; }
  size_t weight_count() const;
};

struct ModelParams {
  InputShape input;
  std::vector<Layer> layers;
  std::vector<double> values;

  int num_classes() const { return layers.empty() ? 0 : layers.back().out_c; }
  Architecture architecture() const;
  uint64_t checksum() const;
  // Finite parameters and consistently chained shapes.
  void validate() const;
};

// Lays out the layers and draws He-style uniform weights
// U(-sqrt(6 / fan_in), sqrt(6 / fan_in)); biases start at zero.
ModelParams init_params(const Architecture& arch, const InputShape& input, uint64_t seed);

// p_i = exp(z_i / T) / sum_j exp(z_j / T), max-subtracted.
std::vector<double> softmax_t(std::span<const double> logits, double temperature);

double cross_entropy_hard(std::span<const double> logits, int label);
double cross_entropy_soft(std::span<const double> student_logits,
                          std::span<const double> teacher_probs, double temperature);
// alpha * s * distill + (1 - alpha) * classification, s = T^2 when scaled.
double total_loss(double alpha, double distill_loss, double classification_loss,
                  double temperature, bool t_squared_scaling);

enum class LossMode { kHardOnly, kDistill };

struct LossSpec {
  LossMode mode = LossMode::kHardOnly;
  double temperature = 1.0;
  double alpha = 0.0;
  bool t_squared_scaling = false;
};

struct TrainConfig {
  int epochs = 40;
  int batch_size = 64;
  double base_lr = 0.1;
  std::vector<int> lr_drop_epochs;
  double lr_drop_factor = 10.0;
  double weight_decay = 0.001;
  uint64_t seed = 1;
  LossMode loss_mode = LossMode::kHardOnly;
  double temperature = 1.0;
  double alpha = 0.8;
  bool t_squared_scaling = false;

  void validate() const;
  LossSpec loss() const { return {loss_mode, temperature, alpha, t_squared_scaling}; }
};

// One training example as seen by the network. `pixels` is H x W x C;
// `teacher_probs` is required in distill mode.
struct BatchItem {
  std::span<const double> pixels;
  int label = 0;
  std::span<const double> teacher_probs;
};

// Logits for one example.
std::vector<double> forward(const ModelParams& params, std::span<const double> pixels);

// Row-major (batch x K) logits.
std::vector<double> forward_batch(const ModelParams& params, std::span<const BatchItem> batch);

// Mean loss over the batch; `gradients` receives the gradient of that mean
// with respect to every parameter (resized to params.values.size()).
double backward(const ModelParams& params, std::span<const BatchItem> batch,
                const LossSpec& loss, std::vector<double>& gradients);

// Mean loss over the batch without gradients.
double batch_loss(const ModelParams& params, std::span<const BatchItem> batch,
                  const LossSpec& loss);

// base_lr / drop_factor^(number of drop epochs <= epoch); epochs are 0-based.
double learning_rate(int epoch, const TrainConfig& cfg);

// w <- w - lr * (g + weight_decay * w).
void sgd_step(ModelParams& params, std::span<const double> gradients, int epoch,
              const TrainConfig& cfg);

// Argmax with ties going to the lowest index.
int argmax(std::span<const double> logits);
int predict(const ModelParams& params, std::span<const double> pixels);

// Checkpoint layout (little endian):
//   "KDBMODL1" | u32 version | u32 height | u32 width | u32 channels |
//   u32 layer_count | layer_count x (u32 kind, u32 outputs, u32 kernel,
//   u32 stride, u32 padding) | u64 value_count | value_count x f64
std::string serialize_params(const ModelParams& params);
ModelParams deserialize_params(const std::string& bytes);
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace kdbias

#endif  // KDBIAS_NN_H_
