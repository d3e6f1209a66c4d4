#pragma once

#include "aad/nn.hpp"
#include "aad/types.hpp"

#include <filesystem>
#include <memory>

namespace aad {

struct EegNetConfig {
  int f1 = 8;    // temporal filters
  int k1 = 128;  // temporal kernel, half the sampling rate
  int depth = 2; // spatial filters per temporal filter
  int channels = kChannels;
  int f2 = 32;   // separable filters
  int k2 = 16;
  int pool1 = 4;
  int pool2 = 8;
  float dropout_p = 0.25f;
  int samples = kEpochSamples;
  double max_norm_depthwise = 1.0;
  double max_norm_dense = 0.25;

  void validate() const;
  int dense_inputs() const;  // f2 * (samples / pool1 / pool2)
};

enum class CountConvention { TrainableOnly, WithBuffers };

/// The two-block compact CNN: temporal conv, depthwise spatial conv,
/// separable conv, batch norms, ELU, pooling, dropout, dense sigmoid.
class EegNet {
 public:
  explicit EegNet(EegNetConfig cfg = {});

  const EegNetConfig& config() const { return cfg_; }

  /// Batch of epochs as N x 1 x C x T; returns N probabilities.
  Eigen::VectorXf forward(const nn::Tensor4& x, bool train);
  /// grad_logit = dLoss/dlogit per sample; accumulates parameter grads.
  void backward(const Eigen::VectorXf& grad_logit);

  std::vector<nn::ParamRef> params();
  std::vector<nn::BufferRef> buffers();
  void zero_grad();
  void apply_max_norm();
  void set_dropout_stream(RngStream* rng);

  /// He-normal init for conv weights, zero dense layer.
  void init_weights(RngStream& rng);

  std::int64_t param_count(CountConvention conv) const;

  nn::TemporalConv conv1;
  nn::BatchNorm bn1;
  nn::DepthwiseSpatialConv dwconv;
  nn::BatchNorm bn2;
  nn::Elu elu1;
  nn::AvgPool pool1;
  nn::Dropout drop1;
  nn::SeparableConv sep;
  nn::BatchNorm bn3;
  nn::Elu elu2;
  nn::AvgPool pool2;
  nn::Dropout drop2;
  nn::DenseSigmoid dense;

 private:
  EegNetConfig cfg_;
};

/// Flat snapshot of every parameter and buffer, for checkpointing and
/// best-model tracking.
struct ModelSnapshot {
  std::vector<std::pair<std::string, Eigen::ArrayXf>> blobs;
};

ModelSnapshot snapshot(EegNet& model);
void restore(EegNet& model, const ModelSnapshot& snap);

/// Checkpoint file: EAAD-style magic "EACK", version, header with blob
/// names/sizes and the optimizer step, float32 blobs, Adam moments.
void save_checkpoint(const std::filesystem::path& dest, EegNet& model,
                     const nn::Adam* opt = nullptr);
void load_checkpoint(const std::filesystem::path& source, EegNet& model,
                     nn::Adam* opt = nullptr);

}  // namespace aad
