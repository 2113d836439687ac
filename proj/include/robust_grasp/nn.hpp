#pragma once

// Minimal convolutional building blocks with hand-written backward passes.
//
// Activations are stored channel-major: a C x (B*H*W) column-major matrix,
// so the C values of one spatial site are contiguous and a sample's block
// of H*W sites is contiguous. Dense activations are F x B.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace robust_grasp::nn {

template <class S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <class S>
struct Tensor {
  Matrix<S> data;  // channels x (batch * height * width)
  int batch = 1;
  int height = 1;
  int width = 1;

  int channels() const { return static_cast<int>(data.rows()); }
  int sites() const { return height * width; }
};

template <class S>
struct ParamBlock {
  Matrix<S>* value;
  Matrix<S>* grad;
  std::string name;
};

template <class S>
class Layer {
 public:
  virtual ~Layer() = default;
  // Training pass; keeps what backward() needs.
  virtual Tensor<S> forward(const Tensor<S>& x) = 0;
  // Stateless pass, safe for concurrent readers.
  virtual Tensor<S> infer(const Tensor<S>& x) const = 0;
  // Accumulates parameter gradients and returns d(loss)/d(input).
  virtual Tensor<S> backward(const Tensor<S>& grad_out) = 0;
  virtual std::vector<ParamBlock<S>> params() { return {}; }
  virtual std::unique_ptr<Layer<S>> clone() const = 0;
  virtual std::string kind() const = 0;
};

template <class S>
void he_init(Matrix<S>& w, int fan_in, Rng& rng) {
  const double std = std::sqrt(2.0 / fan_in);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<S>(rng.normal(0.0, std));
}

// k x k convolution, stride 1, zero padding k/2 (same-size output).
template <class S>
class Conv2d final : public Layer<S> {
 public:
  // `input_grad` false skips d(loss)/d(input) (first layer of a network).
  Conv2d(int in_channels, int out_channels, int kernel, Rng& rng, bool input_grad = true)
      : cin_(in_channels), cout_(out_channels), k_(kernel), input_grad_(input_grad),
        weight_(out_channels, kernel * kernel * in_channels), bias_(out_channels, 1),
        dweight_(Matrix<S>::Zero(out_channels, kernel * kernel * in_channels)),
        dbias_(Matrix<S>::Zero(out_channels, 1)) {
    he_init(weight_, cin_ * k_ * k_, rng);
    bias_.setZero();
  }

  Tensor<S> forward(const Tensor<S>& x) override {
    in_shape_ = x;
    in_shape_.data.resize(0, 0);
    im2col(x, cols_);
    return apply(x, cols_);
  }

  Tensor<S> infer(const Tensor<S>& x) const override {
    Matrix<S> cols;
    im2col(x, cols);
    return apply(x, cols);
  }

  Tensor<S> backward(const Tensor<S>& g) override {
    dweight_.noalias() += g.data * cols_.transpose();
    dbias_ += g.data.rowwise().sum();
    if (!input_grad_) return {};
    Matrix<S> dcols = weight_.transpose() * g.data;
    Tensor<S> dx{Matrix<S>::Zero(cin_, static_cast<Eigen::Index>(in_shape_.batch) * in_shape_.sites()),
                 in_shape_.batch, in_shape_.height, in_shape_.width};
    const int h = in_shape_.height, w = in_shape_.width, pad = k_ / 2;
    for (int b = 0; b < in_shape_.batch; ++b)
      for (int oy = 0; oy < h; ++oy)
        for (int ox = 0; ox < w; ++ox) {
          const Eigen::Index col = (static_cast<Eigen::Index>(b) * h + oy) * w + ox;
          const S* src = dcols.data() + col * dcols.rows();
          for (int ky = 0; ky < k_; ++ky) {
            const int iy = oy + ky - pad;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < k_; ++kx) {
              const int ix = ox + kx - pad;
              if (ix < 0 || ix >= w) continue;
              S* dst = dx.data.data() + ((static_cast<Eigen::Index>(b) * h + iy) * w + ix) * cin_;
              const S* s = src + (ky * k_ + kx) * cin_;
              for (int c = 0; c < cin_; ++c) dst[c] += s[c];
            }
          }
        }
    return dx;
  }

  std::vector<ParamBlock<S>> params() override {
    return {{&weight_, &dweight_, "conv.weight"}, {&bias_, &dbias_, "conv.bias"}};
  }
  std::unique_ptr<Layer<S>> clone() const override { return std::make_unique<Conv2d>(*this); }
  std::string kind() const override { return "conv"; }

  Matrix<S>& weight() { return weight_; }
  Matrix<S>& bias() { return bias_; }

 private:
  void im2col(const Tensor<S>& x, Matrix<S>& cols) const {
    if (x.channels() != cin_) throw ShapeError("conv: channel mismatch");
    const int h = x.height, w = x.width, pad = k_ / 2;
    cols.resize(static_cast<Eigen::Index>(k_) * k_ * cin_, static_cast<Eigen::Index>(x.batch) * h * w);
    for (int b = 0; b < x.batch; ++b)
      for (int oy = 0; oy < h; ++oy)
        for (int ox = 0; ox < w; ++ox) {
          const Eigen::Index col = (static_cast<Eigen::Index>(b) * h + oy) * w + ox;
          S* dst = cols.data() + col * cols.rows();
          for (int ky = 0; ky < k_; ++ky) {
            const int iy = oy + ky - pad;
            for (int kx = 0; kx < k_; ++kx) {
              const int ix = ox + kx - pad;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) {
                std::fill_n(dst + (ky * k_ + kx) * cin_, cin_, S(0));
                continue;
              }
              const S* src = x.data.data() + ((static_cast<Eigen::Index>(b) * h + iy) * w + ix) * cin_;
              S* d = dst + (ky * k_ + kx) * cin_;
              for (int c = 0; c < cin_; ++c) d[c] = src[c];
            }
          }
        }
  }

  Tensor<S> apply(const Tensor<S>& x, const Matrix<S>& cols) const {
    Tensor<S> y{Matrix<S>(cout_, cols.cols()), x.batch, x.height, x.width};
    y.data.noalias() = weight_ * cols;
    y.data.colwise() += bias_.col(0);
    return y;
  }

  int cin_, cout_, k_;
  bool input_grad_;
  Matrix<S> weight_, bias_, dweight_, dbias_;
  Matrix<S> cols_;
  Tensor<S> in_shape_;
};

template <class S>
class Relu final : public Layer<S> {
 public:
  Tensor<S> forward(const Tensor<S>& x) override {
    out_ = infer(x);
    return out_;
  }
  Tensor<S> infer(const Tensor<S>& x) const override {
    Tensor<S> y = x;
    y.data = y.data.cwiseMax(S(0));
    return y;
  }
  Tensor<S> backward(const Tensor<S>& g) override {
    Tensor<S> dx = g;
    dx.data = (out_.data.array() > S(0)).select(g.data, S(0));
    return dx;
  }
  std::unique_ptr<Layer<S>> clone() const override { return std::make_unique<Relu>(*this); }
  std::string kind() const override { return "relu"; }

 private:
  Tensor<S> out_;
};

// 2x2 max pooling, stride 2 (odd trailing rows/columns dropped).
template <class S>
class MaxPool2 final : public Layer<S> {
 public:
  Tensor<S> forward(const Tensor<S>& x) override {
    in_shape_ = x;
    in_shape_.data.resize(0, 0);
    return pool(x, &argmax_);
  }
  Tensor<S> infer(const Tensor<S>& x) const override { return pool(x, nullptr); }
  Tensor<S> backward(const Tensor<S>& g) override {
    Tensor<S> dx{Matrix<S>::Zero(g.channels(), static_cast<Eigen::Index>(in_shape_.batch) * in_shape_.sites()),
                 in_shape_.batch, in_shape_.height, in_shape_.width};
    for (Eigen::Index i = 0; i < g.data.size(); ++i) dx.data.data()[argmax_[static_cast<std::size_t>(i)]] += g.data.data()[i];
    return dx;
  }
  std::unique_ptr<Layer<S>> clone() const override { return std::make_unique<MaxPool2>(*this); }
  std::string kind() const override { return "maxpool"; }

 private:
  static Tensor<S> pool(const Tensor<S>& x, std::vector<Eigen::Index>* argmax) {
    const int c = x.channels(), h = x.height / 2, w = x.width / 2;
    Tensor<S> y{Matrix<S>(c, static_cast<Eigen::Index>(x.batch) * h * w), x.batch, h, w};
    if (argmax) argmax->assign(static_cast<std::size_t>(y.data.size()), 0);
    for (int b = 0; b < x.batch; ++b)
      for (int oy = 0; oy < h; ++oy)
        for (int ox = 0; ox < w; ++ox) {
          const Eigen::Index ocol = (static_cast<Eigen::Index>(b) * h + oy) * w + ox;
          Eigen::Index icol[4];
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx)
              icol[dy * 2 + dx] = (static_cast<Eigen::Index>(b) * x.height + 2 * oy + dy) * x.width + 2 * ox + dx;
          for (int ch = 0; ch < c; ++ch) {
            Eigen::Index best = icol[0] * c + ch;
            for (int q = 1; q < 4; ++q) {
              const Eigen::Index idx = icol[q] * c + ch;
              if (x.data.data()[idx] > x.data.data()[best]) best = idx;
            }
            const Eigen::Index out = ocol * c + ch;
            y.data.data()[out] = x.data.data()[best];
            if (argmax) (*argmax)[static_cast<std::size_t>(out)] = best;
          }
        }
    return y;
  }

  std::vector<Eigen::Index> argmax_;
  Tensor<S> in_shape_;
};

// Reinterprets C x (B*H*W) as (H*W*C) x B; the storage order already matches.
template <class S>
class Flatten final : public Layer<S> {
 public:
  Tensor<S> forward(const Tensor<S>& x) override {
    in_shape_ = x;
    in_shape_.data.resize(0, 0);
    return infer(x);
  }
  Tensor<S> infer(const Tensor<S>& x) const override {
    Tensor<S> y;
    y.data = Eigen::Map<const Matrix<S>>(x.data.data(), x.data.rows() * x.sites(), x.batch);
    y.batch = x.batch;
    return y;
  }
  Tensor<S> backward(const Tensor<S>& g) override {
    Tensor<S> dx = in_shape_;
    dx.data = Eigen::Map<const Matrix<S>>(g.data.data(), g.data.rows() / in_shape_.sites(),
                                          static_cast<Eigen::Index>(in_shape_.batch) * in_shape_.sites());
    return dx;
  }
  std::unique_ptr<Layer<S>> clone() const override { return std::make_unique<Flatten>(*this); }
  std::string kind() const override { return "flatten"; }

 private:
  Tensor<S> in_shape_;
};

template <class S>
class Dense final : public Layer<S> {
 public:
  Dense(int in, int out, Rng& rng)
      : weight_(out, in), bias_(Matrix<S>::Zero(out, 1)), dweight_(Matrix<S>::Zero(out, in)),
        dbias_(Matrix<S>::Zero(out, 1)) {
    he_init(weight_, in, rng);
  }

  Tensor<S> forward(const Tensor<S>& x) override {
    x_ = x.data;
    return infer(x);
  }
  Tensor<S> infer(const Tensor<S>& x) const override {
    if (x.data.rows() != weight_.cols()) throw ShapeError("dense: input width mismatch");
    Tensor<S> y;
    y.batch = x.batch;
    y.data.noalias() = weight_ * x.data;
    y.data.colwise() += bias_.col(0);
    return y;
  }
  Tensor<S> backward(const Tensor<S>& g) override {
    dweight_.noalias() += g.data * x_.transpose();
    dbias_ += g.data.rowwise().sum();
    Tensor<S> dx;
    dx.batch = g.batch;
    dx.data.noalias() = weight_.transpose() * g.data;
    return dx;
  }
  std::vector<ParamBlock<S>> params() override {
    return {{&weight_, &dweight_, "dense.weight"}, {&bias_, &dbias_, "dense.bias"}};
  }
  std::unique_ptr<Layer<S>> clone() const override { return std::make_unique<Dense>(*this); }
  std::string kind() const override { return "dense"; }

  Matrix<S>& weight() { return weight_; }
  Matrix<S>& bias() { return bias_; }

 private:
  Matrix<S> weight_, bias_, dweight_, dbias_;
  Matrix<S> x_;
};

template <class S>
class Sequential {
 public:
  Sequential() = default;
  Sequential(const Sequential& o) {
    for (const auto& l : o.layers_) layers_.push_back(l->clone());
  }
  Sequential& operator=(const Sequential& o) {
    if (this != &o) {
      layers_.clear();
      for (const auto& l : o.layers_) layers_.push_back(l->clone());
    }
    return *this;
  }
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  template <class L, class... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor<S> forward(Tensor<S> x) {
    for (auto& l : layers_) x = l->forward(x);
    return x;
  }
  Tensor<S> infer(Tensor<S> x) const {
    for (const auto& l : layers_) x = l->infer(x);
    return x;
  }
  Tensor<S> backward(Tensor<S> g) {
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
  }

  std::vector<ParamBlock<S>> params() {
    std::vector<ParamBlock<S>> out;
    for (auto& l : layers_)
      for (auto& p : l->params()) out.push_back(p);
    return out;
  }

  Layer<S>& layer(std::size_t i) { return *layers_.at(i); }
  std::size_t size() const { return layers_.size(); }

 private:
  std::vector<std::unique_ptr<Layer<S>>> layers_;
};

template <class S>
std::size_t parameter_count(const std::vector<ParamBlock<S>>& ps) {
  std::size_t n = 0;
  for (const auto& p : ps) n += static_cast<std::size_t>(p.value->size());
  return n;
}

template <class S>
void zero_grad(const std::vector<ParamBlock<S>>& ps) {
  for (const auto& p : ps) p.grad->setZero();
}

}  // namespace robust_grasp::nn
