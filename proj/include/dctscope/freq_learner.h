// Copyright 2026 The dctscope Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small from-scratch network over DCT volumes for single vs double JPEG
// classification, with exact reverse-mode gradients and an SGD trainer.
//
// Pipeline for an H x W input (multiples of 8):
//   A: 8x8 conv, dilation 8, zero padding 32 before / 24 after -> ReLU
//      -> 1x1 conv -> ReLU
//   B: qtable multiply -> 1x1 conv -> ReLU          (optional)
//   concat(A, B) -> frequency separation (64 x channels, H/8 x W/8)
//   -> 3x3 conv -> ReLU -> 3x3 conv -> ReLU -> global average pool
//   -> linear head -> logit (positive = double compressed)
// Every pre-separation operation only mixes positions of the same frequency.

#ifndef DCTSCOPE_FREQ_LEARNER_H_
#define DCTSCOPE_FREQ_LEARNER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dctscope/eval_metrics.h"
#include "dctscope/jpeg_codec.h"

namespace dctscope {

enum class InputKind {
  kVolume,  // one-hot clipped |coefficient| volume, T + 1 channels
  kRawDct,  // quantized coefficients / 32, one channel
  kPixels,  // (decoded pixel - 128) / 64, one channel
};
std::string InputKindName(InputKind k);
std::optional<InputKind> ParseInputKind(const std::string& s);

struct LearnerArch {
  InputKind input = InputKind::kVolume;
  bool use_qtable = true;
  int threshold = 20;
  int dilated_width = 8;  // outputs of the 8x8 dilated conv
  int branch_width = 2;   // outputs of each branch before separation
  int post_width = 16;    // outputs of each 3x3 conv
  bool operator==(const LearnerArch&) const = default;
};

int InputChannels(const LearnerArch& arch);
// Channels entering frequency separation.
int SeparatedBranchChannels(const LearnerArch& arch);

struct ParamTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> values;
  bool operator==(const ParamTensor&) const = default;
};

// Tensor order and layouts:
//   a_w [8, 8, Cin, Wd]  (tap row, tap col, input channel, output)
//   a_b [Wd]
//   a1_w [Wb, Wd], a1_b [Wb]
//   b_w [Wb, Cin], b_b [Wb]            (only with use_qtable)
//   c1_w [P, 64 * S, 3, 3], c1_b [P]
//   c2_w [P, P, 3, 3], c2_b [P]
//   head_w [P], head_b [1]
struct LearnerParams {
  LearnerArch arch;
  std::vector<ParamTensor> tensors;

  ParamTensor& get(const std::string& name);
  const ParamTensor& get(const std::string& name) const;
  size_t size() const;  // total scalar count
  bool operator==(const LearnerParams&) const = default;
};

// All-zero parameters of the right shapes.
LearnerParams ZeroParams(const LearnerArch& arch);
// He-normal weights, zero biases.
LearnerParams InitParams(const LearnerArch& arch, uint64_t seed);

// One labelled grid-aligned patch. The network input is built from it on
// demand for the configured InputKind.
struct TrainExample {
  CoeffGrid grid;
  QuantTable qtable;
  GrayImage pixels;  // decoded luma; used by InputKind::kPixels
  int label = 0;     // 1 = double compressed
};

TrainExample ExampleFromJpeg(std::span<const uint8_t> jpeg, int label);

// Network input in a compact form: one channel index per position for
// volumes, one real value per position otherwise.
struct LearnerInput {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> level;  // kVolume
  std::vector<double> plane;   // kRawDct / kPixels
  QuantTable qtable;
};

// Errors: kMisalignedInput unless the grid is a multiple of 8.
LearnerInput MakeInput(const LearnerArch& arch, const CoeffGrid& grid,
                       const QuantTable& qtable, const GrayImage* pixels);
LearnerInput MakeInput(const LearnerArch& arch, const TrainExample& ex);

// Intermediate values kept for inspection.
struct ForwardTrace {
  // S x H x W activations entering frequency separation.
  std::vector<double> pre_separation;
  // P pooled features.
  std::vector<double> pooled;
  // Hash of the on/off state of every rectifier. Two parameter points with
  // the same pattern lie on the same linear piece of each rectifier.
  uint64_t activation_pattern = 0;
};

// Errors: kShapeMismatch when the input kind does not match the parameters.
double Forward(const LearnerParams& params, const LearnerInput& input,
               ForwardTrace* trace = nullptr);

// Mean binary cross-entropy over the batch and its exact gradient (same
// layout as params). Errors: kShapeMismatch for an empty batch, kNonFinite.
struct LossAndGradient {
  double loss = 0;
  LearnerParams gradient;
  std::vector<double> logits;  // per example, before the update
};
LossAndGradient Backward(const LearnerParams& params,
                         std::span<const LearnerInput> batch,
                         std::span<const int> labels);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 0.05;
  double lr_decay = 0.1;
  int lr_step_epochs = 10;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  uint64_t seed = 1;
};

struct ClassMetrics {
  double acc = 0;
  double tpr = 0;
  double tnr = 0;
  int64_t count = 0;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double learning_rate = 0;
  double train_loss = 0;
  ClassMetrics train;  // from the forward passes made during the epoch
  ClassMetrics val;
};

struct TrainResult {
  LearnerParams params;       // parameters of the best epoch
  LearnerParams final_params;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  ClassMetrics best_val;
};

// Called after every epoch; for progress output.
using EpochCallback = std::function<void(const EpochRecord&)>;

// Nesterov SGD with weight decay and step learning-rate decay; the batch
// order is a seeded shuffle. The best epoch is chosen by validation
// accuracy (earliest on ties). Errors: kEmptyClass when the training set
// lacks a class, kNonFinite on divergence.
TrainResult Train(const LearnerArch& arch, const TrainConfig& config,
                  std::span<const TrainExample> train,
                  std::span<const TrainExample> val,
                  const EpochCallback& on_epoch = {});

// Doubles are positives; logit >= 0 predicts double.
ClassMetrics Evaluate(const LearnerParams& params,
                      std::span<const TrainExample> data);
ClassMetrics MetricsFromPredictions(std::span<const int> predicted,
                                    std::span<const int> labels);

struct AblationReport {
  TrainResult with_qtable;
  TrainResult without_qtable;
  uint64_t seed = 0;
};
// Same seed, data and schedule; only use_qtable differs.
AblationReport AblateQtable(const LearnerArch& arch, const TrainConfig& config,
                            std::span<const TrainExample> train,
                            std::span<const TrainExample> val);

// Tamper map from 64 x 64 windows at stride 8: each pixel gets the mean of
// 1 - sigmoid(logit) over the windows covering it (high = single
// compressed). Images smaller than a window are scored as one window.
ProbabilityMap SlidingWindowMap(const LearnerParams& params,
                                const JpegModel& model, int window = 64,
                                int stride = 8);

// Versioned binary checkpoint: magic, version, architecture, shape table,
// little-endian float64 values, CRC-32. Errors: kIo, kCorruptStream.
std::vector<uint8_t> SerializeParams(const LearnerParams& params);
LearnerParams DeserializeParams(std::span<const uint8_t> bytes);
void SaveCheckpoint(const std::filesystem::path& path, const LearnerParams& p);
LearnerParams LoadCheckpoint(const std::filesystem::path& path);

std::string HistoryCsv(const std::vector<EpochRecord>& history);

}  // namespace dctscope

#endif  // DCTSCOPE_FREQ_LEARNER_H_
