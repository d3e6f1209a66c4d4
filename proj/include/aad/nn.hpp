#pragma once

#include "aad/rng.hpp"

#include <Eigen/Dense>

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace aad::nn {

struct NnError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using RowMatrixXf =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using PlaneMap = Eigen::Map<RowMatrixXf>;
using ConstPlaneMap = Eigen::Map<const RowMatrixXf>;

/// N x F x H x W float tensor, dense row-major.
struct Tensor4 {
  int n = 0, f = 0, h = 0, w = 0;
  Eigen::ArrayXf data;

  Tensor4() = default;
  Tensor4(int n_, int f_, int h_, int w_)
      : n(n_), f(f_), h(h_), w(w_),
        data(Eigen::ArrayXf::Zero(static_cast<Eigen::Index>(n_) * f_ * h_ * w_)) {
    if (n_ < 1 || f_ < 1 || h_ < 1 || w_ < 1) throw NnError("Tensor4: bad shape");
  }

  Eigen::Index size() const { return data.size(); }

  PlaneMap plane(int ni, int fi) {
    return PlaneMap(data.data() + (static_cast<Eigen::Index>(ni) * f + fi) * h * w, h, w);
  }
  ConstPlaneMap plane(int ni, int fi) const {
    return ConstPlaneMap(data.data() + (static_cast<Eigen::Index>(ni) * f + fi) * h * w,
                         h, w);
  }
  bool same_shape(const Tensor4& o) const {
    return n == o.n && f == o.f && h == o.h && w == o.w;
  }
};

struct ParamRef {
  std::string name;
  Eigen::ArrayXf* value;
  Eigen::ArrayXf* grad;
};

struct BufferRef {
  std::string name;
  Eigen::ArrayXf* value;
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor4 forward(const Tensor4& x, bool train) = 0;
  virtual Tensor4 backward(const Tensor4& grad_out) = 0;
  virtual std::vector<ParamRef> params() { return {}; }
  virtual std::vector<BufferRef> buffers() { return {}; }
};

/// Cross-correlation along W with zero padding ("same" length); the
/// kernel element k aligns with input offset k - K/2. No bias.
class TemporalConv : public Layer {
 public:
  TemporalConv(std::string name, int out_maps, int kernel_w);

  Tensor4 forward(const Tensor4& x, bool train) override;
  Tensor4 backward(const Tensor4& grad_out) override;
  std::vector<ParamRef> params() override;

  Eigen::ArrayXf weight;  // out_maps x kernel_w
  Eigen::ArrayXf wgrad;

 private:
  std::string name_;
  int out_maps_, kernel_w_;
  Tensor4 x_;
};

/// D spatial projections per input map, kernel (H, 1), valid: output
/// height 1, map order f*D + d. No bias.
class DepthwiseSpatialConv : public Layer {
 public:
  DepthwiseSpatialConv(std::string name, int in_maps, int depth, int in_h);

  Tensor4 forward(const Tensor4& x, bool train) override;
  Tensor4 backward(const Tensor4& grad_out) override;
  std::vector<ParamRef> params() override;

  /// Rescales any (f, d) kernel whose norm exceeds limit back to it.
  void max_norm(double limit);

  Eigen::ArrayXf weight;  // (in_maps * depth) x in_h, unit-contiguous
  Eigen::ArrayXf wgrad;

 private:
  std::string name_;
  int in_maps_, depth_, in_h_;
  Tensor4 x_;
};

/// Depthwise temporal (1 x K, same padding) then pointwise 1x1 mixing
/// to out_maps. No biases.
class SeparableConv : public Layer {
 public:
  SeparableConv(std::string name, int in_maps, int out_maps, int kernel_w);

  Tensor4 forward(const Tensor4& x, bool train) override;
  Tensor4 backward(const Tensor4& grad_out) override;
  std::vector<ParamRef> params() override;

  Eigen::ArrayXf depthwise;  // in_maps x kernel_w
  Eigen::ArrayXf dgrad;
  Eigen::ArrayXf pointwise;  // out_maps x in_maps
  Eigen::ArrayXf pgrad;

 private:
  std::string name_;
  int in_maps_, out_maps_, kernel_w_;
  Tensor4 x_;
  Tensor4 mid_;  // after the depthwise pass
};

class BatchNorm : public Layer {
 public:
  BatchNorm(std::string name, int maps, float eps = 1e-3f, float momentum = 0.01f);

  Tensor4 forward(const Tensor4& x, bool train) override;
  Tensor4 backward(const Tensor4& grad_out) override;
  std::vector<ParamRef> params() override;
  std::vector<BufferRef> buffers() override;

  Eigen::ArrayXf gamma, beta;
  Eigen::ArrayXf ggrad, bgrad;
  Eigen::ArrayXf running_mean, running_var;

 private:
  std::string name_;
  int maps_;
  float eps_, momentum_;
  Tensor4 xhat_;
  Eigen::ArrayXf invstd_;
  Eigen::Index per_map_ = 0;
};

class Elu : public Layer {
 public:
  Tensor4 forward(const Tensor4& x, bool train) override;
  Tensor4 backward(const Tensor4& grad_out) override;

 private:
  Tensor4 x_, y_;
};

/// Non-overlapping averaging along W; a remainder is truncated.
class AvgPool : public Layer {
 public:
  explicit AvgPool(int pool_w);
  Tensor4 forward(const Tensor4& x, bool train) override;
  Tensor4 backward(const Tensor4& grad_out) override;

 private:
  int pool_w_;
  int in_w_ = 0, n_ = 0, f_ = 0, h_ = 0;
};

class Dropout : public Layer {
 public:
  explicit Dropout(float prob);
  Tensor4 forward(const Tensor4& x, bool train) override;
  Tensor4 backward(const Tensor4& grad_out) override;
  void set_stream(RngStream* rng) { rng_ = rng; }

 private:
  float prob_;
  RngStream* rng_ = nullptr;
  Eigen::ArrayXf mask_;
  bool train_ = false;
};

/// Flatten + fully connected single unit + sigmoid.
class DenseSigmoid {
 public:
  DenseSigmoid(std::string name, int in_dim);

  /// Returns per-sample probabilities; logits are cached.
  Eigen::VectorXf forward(const Tensor4& x);
  /// grad_logit is dLoss/dlogit per sample.
  Tensor4 backward(const Eigen::VectorXf& grad_logit);
  std::vector<ParamRef> params();
  void max_norm(double limit);

  Eigen::ArrayXf weight;  // in_dim
  Eigen::ArrayXf wgrad;
  Eigen::ArrayXf bias;  // 1
  Eigen::ArrayXf bgrad;
  Eigen::VectorXf logits;

 private:
  std::string name_;
  int in_dim_;
  Tensor4 x_;
};

float stable_sigmoid(float logit);

/// Batch-mean binary cross-entropy with probabilities clamped to
/// [1e-7, 1 - 1e-7].
float bce_loss(const Eigen::VectorXf& p, const Eigen::VectorXf& y);
/// dLoss/dlogit = (p - y) / N (sigmoid + BCE identity).
Eigen::VectorXf bce_grad_logit(const Eigen::VectorXf& p, const Eigen::VectorXf& y);

struct AdamConfig {
  float lr = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

/// Bias-corrected Adam over a fixed parameter list.
class Adam {
 public:
  Adam(std::vector<ParamRef> params, AdamConfig cfg = {});
  void step();
  void zero_grad();

  std::int64_t t() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  std::vector<ParamRef>& params() { return params_; }
  std::vector<Eigen::ArrayXf>& moments1() { return m_; }
  std::vector<Eigen::ArrayXf>& moments2() { return v_; }
  void set_t(std::int64_t t) { t_ = t; }

 private:
  std::vector<ParamRef> params_;
  AdamConfig cfg_;
  std::vector<Eigen::ArrayXf> m_, v_;
  std::int64_t t_ = 0;
};

/// Rescales each contiguous unit of `unit_size` entries to norm
/// `limit` when it exceeds it.
void max_norm_project(Eigen::ArrayXf& w, Eigen::Index unit_size, double limit);

}  // namespace aad::nn
