#include "aad/nn.hpp"

#include <cmath>
#include <utility>

namespace aad::nn {
namespace {

// Adds src shifted by s along columns into dst, scaled; out-of-range
// columns fall on zero padding and are dropped.
template <typename Dst, typename Src>
void add_shifted(Dst&& dst, const Src& src, int s, float scale) {
  const int W = static_cast<int>(dst.cols());
  int lo = std::max(0, -s);
  int hi = std::min(W, W - s);  // exclusive
  if (hi <= lo) return;
  dst.middleCols(lo, hi - lo) += scale * src.middleCols(lo + s, hi - lo);
}

template <typename A, typename B>
float shifted_dot(const A& a, const B& b, int s) {
  // sum over t of a[:, t] . b[:, t+s], zero outside.
  const int W = static_cast<int>(a.cols());
  int lo = std::max(0, -s);
  int hi = std::min(W, W - s);
  if (hi <= lo) return 0.0f;
  return (a.middleCols(lo, hi - lo).array() * b.middleCols(lo + s, hi - lo).array())
      .sum();
}

}  // namespace

// ---- TemporalConv ----

TemporalConv::TemporalConv(std::string name, int out_maps, int kernel_w)
    : weight(Eigen::ArrayXf::Zero(static_cast<Eigen::Index>(out_maps) * kernel_w)),
      wgrad(Eigen::ArrayXf::Zero(weight.size())),
      name_(std::move(name)),
      out_maps_(out_maps),
      kernel_w_(kernel_w) {}

Tensor4 TemporalConv::forward(const Tensor4& x, bool) {
  if (x.f != 1) throw NnError("TemporalConv: expected single input map");
  x_ = x;
  const int P = kernel_w_ / 2;
  Tensor4 y(x.n, out_maps_, x.h, x.w);
  for (int ni = 0; ni < x.n; ++ni) {
    ConstPlaneMap xin = x.plane(ni, 0);
    for (int fo = 0; fo < out_maps_; ++fo) {
      PlaneMap out = y.plane(ni, fo);
      const float* wf = weight.data() + static_cast<Eigen::Index>(fo) * kernel_w_;
      for (int k = 0; k < kernel_w_; ++k) add_shifted(out, xin, k - P, wf[k]);
    }
  }
  return y;
}

Tensor4 TemporalConv::backward(const Tensor4& g) {
  const int P = kernel_w_ / 2;
  Tensor4 dx(x_.n, 1, x_.h, x_.w);
  for (int ni = 0; ni < x_.n; ++ni) {
    ConstPlaneMap xin = std::as_const(x_).plane(ni, 0);
    PlaneMap dxi = dx.plane(ni, 0);
    for (int fo = 0; fo < out_maps_; ++fo) {
      ConstPlaneMap go = g.plane(ni, fo);
      const float* wf = weight.data() + static_cast<Eigen::Index>(fo) * kernel_w_;
      float* dwf = wgrad.data() + static_cast<Eigen::Index>(fo) * kernel_w_;
      for (int k = 0; k < kernel_w_; ++k) {
        add_shifted(dxi, go, -(k - P), wf[k]);
        dwf[k] += shifted_dot(go, xin, k - P);
      }
    }
  }
  return dx;
}

std::vector<ParamRef> TemporalConv::params() {
  return {{name_ + ".weight", &weight, &wgrad}};
}

// ---- DepthwiseSpatialConv ----

DepthwiseSpatialConv::DepthwiseSpatialConv(std::string name, int in_maps, int depth,
                                           int in_h)
    : weight(Eigen::ArrayXf::Zero(static_cast<Eigen::Index>(in_maps) * depth * in_h)),
      wgrad(Eigen::ArrayXf::Zero(weight.size())),
      name_(std::move(name)),
      in_maps_(in_maps),
      depth_(depth),
      in_h_(in_h) {}

Tensor4 DepthwiseSpatialConv::forward(const Tensor4& x, bool) {
  if (x.f != in_maps_ || x.h != in_h_)
    throw NnError("DepthwiseSpatialConv: kernel height must equal input height");
  x_ = x;
  Tensor4 y(x.n, in_maps_ * depth_, 1, x.w);
  Eigen::Map<const RowMatrixXf> W(weight.data(),
                                  static_cast<Eigen::Index>(in_maps_) * depth_, in_h_);
  for (int ni = 0; ni < x.n; ++ni)
    for (int fi = 0; fi < in_maps_; ++fi) {
      ConstPlaneMap xin = x.plane(ni, fi);  // C x T
      for (int d = 0; d < depth_; ++d)
        y.plane(ni, fi * depth_ + d) = W.row(fi * depth_ + d) * xin;
    }
  return y;
}

Tensor4 DepthwiseSpatialConv::backward(const Tensor4& g) {
  Tensor4 dx(x_.n, in_maps_, in_h_, x_.w);
  Eigen::Map<const RowMatrixXf> W(weight.data(),
                                  static_cast<Eigen::Index>(in_maps_) * depth_, in_h_);
  Eigen::Map<RowMatrixXf> dW(wgrad.data(), static_cast<Eigen::Index>(in_maps_) * depth_,
                             in_h_);
  for (int ni = 0; ni < x_.n; ++ni)
    for (int fi = 0; fi < in_maps_; ++fi) {
      ConstPlaneMap xin = std::as_const(x_).plane(ni, fi);
      PlaneMap dxi = dx.plane(ni, fi);
      for (int d = 0; d < depth_; ++d) {
        ConstPlaneMap go = g.plane(ni, fi * depth_ + d);  // 1 x T
        dxi.noalias() += W.row(fi * depth_ + d).transpose() * go;
        dW.row(fi * depth_ + d) += go * xin.transpose();
      }
    }
  return dx;
}

std::vector<ParamRef> DepthwiseSpatialConv::params() {
  return {{name_ + ".weight", &weight, &wgrad}};
}

void DepthwiseSpatialConv::max_norm(double limit) {
  max_norm_project(weight, in_h_, limit);
}

// ---- SeparableConv ----

SeparableConv::SeparableConv(std::string name, int in_maps, int out_maps, int kernel_w)
    : depthwise(Eigen::ArrayXf::Zero(static_cast<Eigen::Index>(in_maps) * kernel_w)),
      dgrad(Eigen::ArrayXf::Zero(depthwise.size())),
      pointwise(Eigen::ArrayXf::Zero(static_cast<Eigen::Index>(out_maps) * in_maps)),
      pgrad(Eigen::ArrayXf::Zero(pointwise.size())),
      name_(std::move(name)),
      in_maps_(in_maps),
      out_maps_(out_maps),
      kernel_w_(kernel_w) {}

Tensor4 SeparableConv::forward(const Tensor4& x, bool) {
  if (x.f != in_maps_ || x.h != 1) throw NnError("SeparableConv: shape mismatch");
  x_ = x;
  const int P = kernel_w_ / 2;
  mid_ = Tensor4(x.n, in_maps_, 1, x.w);
  for (int ni = 0; ni < x.n; ++ni)
    for (int fi = 0; fi < in_maps_; ++fi) {
      ConstPlaneMap xin = x.plane(ni, fi);
      PlaneMap m = mid_.plane(ni, fi);
      const float* df = depthwise.data() + static_cast<Eigen::Index>(fi) * kernel_w_;
      for (int k = 0; k < kernel_w_; ++k) add_shifted(m, xin, k - P, df[k]);
    }

  Tensor4 y(x.n, out_maps_, 1, x.w);
  Eigen::Map<const RowMatrixXf> Pw(pointwise.data(), out_maps_, in_maps_);
  for (int ni = 0; ni < x.n; ++ni) {
    // in_maps x W view of this sample's mid planes.
    ConstPlaneMap mall(mid_.data.data() +
                           static_cast<Eigen::Index>(ni) * in_maps_ * x.w,
                       in_maps_, x.w);
    PlaneMap yall(y.data.data() + static_cast<Eigen::Index>(ni) * out_maps_ * x.w,
                  out_maps_, x.w);
    yall.noalias() = Pw * mall;
  }
  return y;
}

Tensor4 SeparableConv::backward(const Tensor4& g) {
  const int P = kernel_w_ / 2;
  const int W = x_.w;
  Eigen::Map<const RowMatrixXf> Pw(pointwise.data(), out_maps_, in_maps_);
  Eigen::Map<RowMatrixXf> dPw(pgrad.data(), out_maps_, in_maps_);

  Tensor4 dmid(x_.n, in_maps_, 1, W);
  for (int ni = 0; ni < x_.n; ++ni) {
    ConstPlaneMap gall(g.data.data() + static_cast<Eigen::Index>(ni) * out_maps_ * W,
                       out_maps_, W);
    ConstPlaneMap mall(mid_.data.data() + static_cast<Eigen::Index>(ni) * in_maps_ * W,
                       in_maps_, W);
    PlaneMap dmall(dmid.data.data() + static_cast<Eigen::Index>(ni) * in_maps_ * W,
                   in_maps_, W);
    dPw.noalias() += gall * mall.transpose();
    dmall.noalias() = Pw.transpose() * gall;
  }

  Tensor4 dx(x_.n, in_maps_, 1, W);
  for (int ni = 0; ni < x_.n; ++ni)
    for (int fi = 0; fi < in_maps_; ++fi) {
      ConstPlaneMap xin = std::as_const(x_).plane(ni, fi);
      ConstPlaneMap gm = std::as_const(dmid).plane(ni, fi);
      PlaneMap dxi = dx.plane(ni, fi);
      const float* df = depthwise.data() + static_cast<Eigen::Index>(fi) * kernel_w_;
      float* ddf = dgrad.data() + static_cast<Eigen::Index>(fi) * kernel_w_;
      for (int k = 0; k < kernel_w_; ++k) {
        add_shifted(dxi, gm, -(k - P), df[k]);
        ddf[k] += shifted_dot(gm, xin, k - P);
      }
    }
  return dx;
}

std::vector<ParamRef> SeparableConv::params() {
  return {{name_ + ".depthwise", &depthwise, &dgrad},
          {name_ + ".pointwise", &pointwise, &pgrad}};
}

// ---- BatchNorm ----

BatchNorm::BatchNorm(std::string name, int maps, float eps, float momentum)
    : gamma(Eigen::ArrayXf::Ones(maps)),
      beta(Eigen::ArrayXf::Zero(maps)),
      ggrad(Eigen::ArrayXf::Zero(maps)),
      bgrad(Eigen::ArrayXf::Zero(maps)),
      running_mean(Eigen::ArrayXf::Zero(maps)),
      running_var(Eigen::ArrayXf::Ones(maps)),
      name_(std::move(name)),
      maps_(maps),
      eps_(eps),
      momentum_(momentum) {}

Tensor4 BatchNorm::forward(const Tensor4& x, bool train) {
  if (x.f != maps_) throw NnError("BatchNorm: map count mismatch");
  Tensor4 y(x.n, x.f, x.h, x.w);
  const Eigen::Index plane = static_cast<Eigen::Index>(x.h) * x.w;
  per_map_ = static_cast<Eigen::Index>(x.n) * plane;

  if (train) {
    if (x.n < 2) throw NnError("BatchNorm: train mode needs batch size >= 2");
    xhat_ = Tensor4(x.n, x.f, x.h, x.w);
    invstd_ = Eigen::ArrayXf::Zero(maps_);
    for (int fi = 0; fi < maps_; ++fi) {
      double sum = 0.0, sq = 0.0;
      for (int ni = 0; ni < x.n; ++ni) {
        ConstPlaneMap p = x.plane(ni, fi);
        sum += p.sum();
        sq += p.array().square().sum();
      }
      auto m = static_cast<double>(per_map_);
      double mean = sum / m;
      double var = sq / m - mean * mean;
      if (var < 0) var = 0;
      auto istd = static_cast<float>(1.0 / std::sqrt(var + eps_));
      invstd_[fi] = istd;
      for (int ni = 0; ni < x.n; ++ni) {
        xhat_.plane(ni, fi) =
            (x.plane(ni, fi).array() - static_cast<float>(mean)).matrix() * istd;
        y.plane(ni, fi) =
            (xhat_.plane(ni, fi).array() * gamma[fi] + beta[fi]).matrix();
      }
      double var_unbiased = (m > 1) ? var * m / (m - 1.0) : var;
      running_mean[fi] += momentum_ * (static_cast<float>(mean) - running_mean[fi]);
      running_var[fi] += momentum_ * (static_cast<float>(var_unbiased) - running_var[fi]);
    }
  } else {
    for (int fi = 0; fi < maps_; ++fi) {
      auto istd = static_cast<float>(1.0 / std::sqrt(running_var[fi] + eps_));
      for (int ni = 0; ni < x.n; ++ni)
        y.plane(ni, fi) = ((x.plane(ni, fi).array() - running_mean[fi]) * istd *
                           gamma[fi] + beta[fi])
                              .matrix();
    }
  }
  return y;
}

Tensor4 BatchNorm::backward(const Tensor4& g) {
  // Standard train-mode batchnorm backward via cached xhat.
  Tensor4 dx(g.n, g.f, g.h, g.w);
  auto m = static_cast<float>(per_map_);
  for (int fi = 0; fi < maps_; ++fi) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (int ni = 0; ni < g.n; ++ni) {
      ConstPlaneMap gp = g.plane(ni, fi);
      sum_g += gp.sum();
      sum_gx += (gp.array() * xhat_.plane(ni, fi).array()).sum();
    }
    ggrad[fi] += static_cast<float>(sum_gx);
    bgrad[fi] += static_cast<float>(sum_g);
    float c1 = static_cast<float>(sum_g) / m;
    float c2 = static_cast<float>(sum_gx) / m;
    float scale = gamma[fi] * invstd_[fi];
    for (int ni = 0; ni < g.n; ++ni)
      dx.plane(ni, fi) = ((g.plane(ni, fi).array() - c1 -
                           xhat_.plane(ni, fi).array() * c2) *
                          scale)
                             .matrix();
  }
  return dx;
}

std::vector<ParamRef> BatchNorm::params() {
  return {{name_ + ".gamma", &gamma, &ggrad}, {name_ + ".beta", &beta, &bgrad}};
}

std::vector<BufferRef> BatchNorm::buffers() {
  return {{name_ + ".running_mean", &running_mean},
          {name_ + ".running_var", &running_var}};
}

// ---- Elu ----

Tensor4 Elu::forward(const Tensor4& x, bool) {
  x_ = x;
  y_ = x;
  y_.data = x.data.unaryExpr(
      [](float v) { return v >= 0.0f ? v : std::expm1(v); });
  return y_;
}

Tensor4 Elu::backward(const Tensor4& g) {
  Tensor4 dx = g;
  dx.data = g.data * x_.data.unaryExpr([](float v) { return v >= 0.0f ? 1.0f : 0.0f; });
  // Negative side: d/dx (e^x - 1) = e^x = y + 1.
  dx.data += g.data * (y_.data + 1.0f) *
             x_.data.unaryExpr([](float v) { return v < 0.0f ? 1.0f : 0.0f; });
  return dx;
}

// ---- AvgPool ----

AvgPool::AvgPool(int pool_w) : pool_w_(pool_w) {
  if (pool_w < 1) throw NnError("AvgPool: bad width");
}

Tensor4 AvgPool::forward(const Tensor4& x, bool) {
  n_ = x.n;
  f_ = x.f;
  h_ = x.h;
  in_w_ = x.w;
  int out_w = x.w / pool_w_;
  if (out_w < 1) throw NnError("AvgPool: input narrower than pool");
  Tensor4 y(x.n, x.f, x.h, out_w);
  for (int ni = 0; ni < x.n; ++ni)
    for (int fi = 0; fi < x.f; ++fi) {
      ConstPlaneMap xin = x.plane(ni, fi);
      PlaneMap out = y.plane(ni, fi);
      for (int t = 0; t < out_w; ++t)
        out.col(t) = xin.middleCols(t * pool_w_, pool_w_).rowwise().mean();
    }
  return y;
}

Tensor4 AvgPool::backward(const Tensor4& g) {
  Tensor4 dx(n_, f_, h_, in_w_);
  auto inv = 1.0f / static_cast<float>(pool_w_);
  for (int ni = 0; ni < n_; ++ni)
    for (int fi = 0; fi < f_; ++fi) {
      ConstPlaneMap gp = g.plane(ni, fi);
      PlaneMap dxi = dx.plane(ni, fi);
      for (int t = 0; t < g.w; ++t)
        dxi.middleCols(t * pool_w_, pool_w_) = (gp.col(t) * inv).replicate(1, pool_w_);
    }
  return dx;
}

// ---- Dropout ----

Dropout::Dropout(float prob) : prob_(prob) {
  if (prob < 0.0f || prob >= 1.0f) throw NnError("Dropout: prob must be in [0, 1)");
}

Tensor4 Dropout::forward(const Tensor4& x, bool train) {
  train_ = train && prob_ > 0.0f;
  if (!train_) return x;
  if (!rng_) throw NnError("Dropout: no rng stream attached");
  mask_ = Eigen::ArrayXf(x.size());
  float scale = 1.0f / (1.0f - prob_);
  for (Eigen::Index i = 0; i < mask_.size(); ++i)
    mask_[i] = (rng_->uniform() < prob_) ? 0.0f : scale;
  Tensor4 y = x;
  y.data *= mask_;
  return y;
}

Tensor4 Dropout::backward(const Tensor4& g) {
  if (!train_) return g;
  Tensor4 dx = g;
  dx.data *= mask_;
  return dx;
}

// ---- DenseSigmoid ----

DenseSigmoid::DenseSigmoid(std::string name, int in_dim)
    : weight(Eigen::ArrayXf::Zero(in_dim)),
      wgrad(Eigen::ArrayXf::Zero(in_dim)),
      bias(Eigen::ArrayXf::Zero(1)),
      bgrad(Eigen::ArrayXf::Zero(1)),
      name_(std::move(name)),
      in_dim_(in_dim) {}

float stable_sigmoid(float logit) {
  // Clamped strictly inside (0, 1) so extreme logits cannot saturate
  // the probability (and thus the BCE) exactly.
  float p;
  if (logit >= 0.0f) {
    p = 1.0f / (1.0f + std::exp(-logit));
  } else {
    float e = std::exp(logit);
    p = e / (1.0f + e);
  }
  return std::min(std::max(p, 1e-7f), 1.0f - 1e-7f);
}

Eigen::VectorXf DenseSigmoid::forward(const Tensor4& x) {
  Eigen::Index per = static_cast<Eigen::Index>(x.f) * x.h * x.w;
  if (per != in_dim_) throw NnError("DenseSigmoid: flattened size mismatch");
  x_ = x;
  logits.resize(x.n);
  Eigen::Map<const Eigen::VectorXf> w(weight.data(), in_dim_);
  for (int ni = 0; ni < x.n; ++ni) {
    Eigen::Map<const Eigen::VectorXf> xi(x.data.data() + ni * per, per);
    logits[ni] = w.dot(xi) + bias[0];
  }
  Eigen::VectorXf p(x.n);
  for (int ni = 0; ni < x.n; ++ni) p[ni] = stable_sigmoid(logits[ni]);
  return p;
}

Tensor4 DenseSigmoid::backward(const Eigen::VectorXf& grad_logit) {
  Tensor4 dx(x_.n, x_.f, x_.h, x_.w);
  Eigen::Index per = in_dim_;
  for (int ni = 0; ni < x_.n; ++ni) {
    float gl = grad_logit[ni];
    Eigen::Map<const Eigen::ArrayXf> xi(x_.data.data() + ni * per, per);
    Eigen::Map<Eigen::ArrayXf> dxi(dx.data.data() + ni * per, per);
    dxi = gl * weight;
    wgrad += gl * xi;
    bgrad[0] += gl;
  }
  return dx;
}

std::vector<ParamRef> DenseSigmoid::params() {
  return {{name_ + ".weight", &weight, &wgrad}, {name_ + ".bias", &bias, &bgrad}};
}

void DenseSigmoid::max_norm(double limit) { max_norm_project(weight, weight.size(), limit); }

// ---- Loss ----

float bce_loss(const Eigen::VectorXf& p, const Eigen::VectorXf& y) {
  if (p.size() != y.size()) throw NnError("bce_loss: size mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (y[i] != 0.0f && y[i] != 1.0f) throw NnError("bce_loss: labels must be 0/1");
    double pc = std::clamp(static_cast<double>(p[i]), 1e-7, 1.0 - 1e-7);
    acc += -(y[i] * std::log(pc) + (1.0 - y[i]) * std::log(1.0 - pc));
  }
  return static_cast<float>(acc / static_cast<double>(p.size()));
}

Eigen::VectorXf bce_grad_logit(const Eigen::VectorXf& p, const Eigen::VectorXf& y) {
  return (p - y) / static_cast<float>(p.size());
}

// ---- Adam ----

Adam::Adam(std::vector<ParamRef> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  for (const ParamRef& p : params_) {
    m_.emplace_back(Eigen::ArrayXf::Zero(p.value->size()));
    v_.emplace_back(Eigen::ArrayXf::Zero(p.value->size()));
  }
}

void Adam::step() {
  ++t_;
  auto bc1 = static_cast<float>(1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
  auto bc2 = static_cast<float>(1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Eigen::ArrayXf& g = *params_[i].grad;
    if (g.size() != m_[i].size()) throw NnError("Adam: grad shape mismatch");
    m_[i] = cfg_.beta1 * m_[i] + (1.0f - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0f - cfg_.beta2) * g.square();
    *params_[i].value -=
        cfg_.lr * (m_[i] / bc1) / ((v_[i] / bc2).sqrt() + cfg_.eps);
  }
}

void Adam::zero_grad() {
  for (const ParamRef& p : params_) p.grad->setZero();
}

void max_norm_project(Eigen::ArrayXf& w, Eigen::Index unit_size, double limit) {
  if (limit <= 0) throw NnError("max_norm_project: limit must be positive");
  for (Eigen::Index off = 0; off + unit_size <= w.size(); off += unit_size) {
    Eigen::Map<Eigen::ArrayXf> unit(w.data() + off, unit_size);
    auto norm = static_cast<double>(std::sqrt(unit.square().sum()));
    if (norm > limit) unit *= static_cast<float>(limit / norm);
  }
}

}  // namespace aad::nn
