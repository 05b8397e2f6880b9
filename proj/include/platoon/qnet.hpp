#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "platoon/rng.hpp"

namespace platoon {

// Layer widths of the Q approximator. The input is the encoded history
// reshaped to `in_channels` x `history` (action channel, feedback channel).
struct QNetShape {
  int history = 16;
  int in_channels = 2;
  int kernel = 3;
  int conv1 = 8;
  int conv2 = 16;
  int fc1 = 128;
  int fc2 = 64;
  int actions = 200;

  int input_size() const { return in_channels * history; }
  int conv1_len() const { return history - kernel + 1; }
  int conv2_len() const { return conv1_len() - kernel + 1; }
  int flat_size() const { return conv2 * conv2_len(); }
  void validate() const;
  bool operator==(const QNetShape&) const = default;
};

/// Two valid-padded 1-D convolutions and three dense layers, ReLU between
/// them and a linear head with one output per VRB. All parameters live in
/// one flat vector so optimizers, serialization and gradient checks can
/// treat them uniformly.
class QNetwork {
 public:
  // Offsets of each tensor inside the flat parameter vector.
  struct Layout {
    std::size_t w1, b1, w2, b2, w3, b3, w4, b4, w5, b5, total;
  };

  // Intermediate values of one forward pass, kept for backprop.
  struct Activations {
    std::vector<double> z1, a1, z2, a2, z3, a3, z4, a4, q;
  };

  /// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer.
  QNetwork(const QNetShape& shape, Rng& rng);
  QNetwork(const QNetShape& shape, std::vector<double> params);

  const QNetShape& shape() const { return shape_; }
  const Layout& layout() const { return layout_; }
  std::span<const double> params() const { return params_; }
  std::span<double> params() { return params_; }

  std::vector<double> forward(std::span<const double> input) const;
  void forward(std::span<const double> input, Activations& act) const;

  /// Accumulates d q[action] / d theta, scaled by `scale`, into `grad`
  /// (same layout as params()).
  void backward(std::span<const double> input, const Activations& act, int action,
                double scale, std::span<double> grad) const;

  // Names and [offset, offset+size) of each trainable tensor.
  struct Tensor {
    std::string name;
    std::size_t offset;
    std::size_t size;
  };
  std::vector<Tensor> tensors() const;

  /// Raw little-endian float64 dump of params(), plus a JSON sidecar written
  /// by the caller (see config_io).
  void save_binary(const std::string& path) const;
  static QNetwork load_binary(const QNetShape& shape, const std::string& path);

 private:
  QNetShape shape_;
  Layout layout_;
  std::vector<double> params_;
};

}  // namespace platoon
