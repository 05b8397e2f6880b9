#include "platoon/qnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace platoon {

namespace {

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xff) << (8 * (7 - i));
    return r;
  }
  return v;
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

// y = W x + b for a row-major W of shape [rows, cols].
void dense(const double* w, const double* b, const double* x, int rows, int cols,
           double* y) {
  for (int i = 0; i < rows; ++i) {
    const double* wr = w + static_cast<std::size_t>(i) * cols;
    double s = b[i];
    for (int k = 0; k < cols; ++k) s += wr[k] * x[k];
    y[i] = s;
  }
}

}  // namespace

void QNetShape::validate() const {
  if (history < 1 || in_channels < 1 || kernel < 1 || conv1 < 1 || conv2 < 1 ||
      fc1 < 1 || fc2 < 1 || actions < 1)
    throw std::invalid_argument("QNetShape: all widths must be positive");
  if (conv2_len() < 1)
    throw std::invalid_argument("QNetShape: history too short for two convolutions");
}

static QNetwork::Layout make_layout(const QNetShape& s) {
  QNetwork::Layout l{};
  std::size_t o = 0;
  auto take = [&](std::size_t n) {
    const std::size_t at = o;
    o += n;
    return at;
  };
  l.w1 = take(std::size_t(s.conv1) * s.in_channels * s.kernel);
  l.b1 = take(s.conv1);
  l.w2 = take(std::size_t(s.conv2) * s.conv1 * s.kernel);
  l.b2 = take(s.conv2);
  l.w3 = take(std::size_t(s.fc1) * s.flat_size());
  l.b3 = take(s.fc1);
  l.w4 = take(std::size_t(s.fc2) * s.fc1);
  l.b4 = take(s.fc2);
  l.w5 = take(std::size_t(s.actions) * s.fc2);
  l.b5 = take(s.actions);
  l.total = o;
  return l;
}

QNetwork::QNetwork(const QNetShape& shape, Rng& rng) : shape_(shape) {
  shape_.validate();
  layout_ = make_layout(shape_);
  params_.assign(layout_.total, 0.0);
  auto fill = [&](std::size_t from, std::size_t to, int fan_in) {
    const double k = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-k, k);
    for (std::size_t i = from; i < to; ++i) params_[i] = u(rng);
  };
  const auto& l = layout_;
  const int fan1 = shape_.in_channels * shape_.kernel;
  const int fan2 = shape_.conv1 * shape_.kernel;
  fill(l.w1, l.w2, fan1);  // weights and bias of each layer share fan-in
  fill(l.w2, l.w3, fan2);
  fill(l.w3, l.w4, shape_.flat_size());
  fill(l.w4, l.w5, shape_.fc1);
  fill(l.w5, l.total, shape_.fc2);
}

QNetwork::QNetwork(const QNetShape& shape, std::vector<double> params)
    : shape_(shape), params_(std::move(params)) {
  shape_.validate();
  layout_ = make_layout(shape_);
  if (params_.size() != layout_.total)
    throw std::invalid_argument("QNetwork: parameter count does not match shape");
}

std::vector<double> QNetwork::forward(std::span<const double> input) const {
  Activations act;
  forward(input, act);
  return std::move(act.q);
}

void QNetwork::forward(std::span<const double> x, Activations& act) const {
  const auto& s = shape_;
  if (static_cast<int>(x.size()) != s.input_size())
    throw std::invalid_argument("QNetwork: input size mismatch");
  const double* p = params_.data();
  const int C = s.in_channels, K = s.kernel, L1 = s.conv1_len(), L2 = s.conv2_len();

  act.z1.resize(std::size_t(s.conv1) * L1);
  act.a1.resize(act.z1.size());
  for (int o = 0; o < s.conv1; ++o)
    for (int t = 0; t < L1; ++t) {
      double z = p[layout_.b1 + o];
      for (int c = 0; c < C; ++c)
        for (int j = 0; j < K; ++j)
          z += p[layout_.w1 + (std::size_t(o) * C + c) * K + j] * x[std::size_t(t + j) * C + c];
      act.z1[std::size_t(o) * L1 + t] = z;
      act.a1[std::size_t(o) * L1 + t] = relu(z);
    }

  act.z2.resize(std::size_t(s.conv2) * L2);
  act.a2.resize(act.z2.size());
  for (int o = 0; o < s.conv2; ++o)
    for (int t = 0; t < L2; ++t) {
      double z = p[layout_.b2 + o];
      for (int c = 0; c < s.conv1; ++c) {
        const double* w = p + layout_.w2 + (std::size_t(o) * s.conv1 + c) * K;
        const double* a = act.a1.data() + std::size_t(c) * L1 + t;
        for (int j = 0; j < K; ++j) z += w[j] * a[j];
      }
      act.z2[std::size_t(o) * L2 + t] = z;
      act.a2[std::size_t(o) * L2 + t] = relu(z);
    }

  act.z3.resize(s.fc1);
  act.a3.resize(s.fc1);
  dense(p + layout_.w3, p + layout_.b3, act.a2.data(), s.fc1, s.flat_size(), act.z3.data());
  std::transform(act.z3.begin(), act.z3.end(), act.a3.begin(), relu);

  act.z4.resize(s.fc2);
  act.a4.resize(s.fc2);
  dense(p + layout_.w4, p + layout_.b4, act.a3.data(), s.fc2, s.fc1, act.z4.data());
  std::transform(act.z4.begin(), act.z4.end(), act.a4.begin(), relu);

  act.q.resize(s.actions);
  dense(p + layout_.w5, p + layout_.b5, act.a4.data(), s.actions, s.fc2, act.q.data());
}

void QNetwork::backward(std::span<const double> x, const Activations& act, int action,
                        double scale, std::span<double> grad) const {
  const auto& s = shape_;
  if (grad.size() != params_.size()) throw std::invalid_argument("QNetwork: gradient size mismatch");
  if (action < 0 || action >= s.actions) throw std::out_of_range("QNetwork: action out of range");
  const double* p = params_.data();
  double* g = grad.data();
  const int C = s.in_channels, K = s.kernel, L1 = s.conv1_len(), L2 = s.conv2_len();
  const int F = s.flat_size();

  // Head: only row `action` contributes.
  std::vector<double> d4(s.fc2);
  {
    const double* w = p + layout_.w5 + std::size_t(action) * s.fc2;
    double* gw = g + layout_.w5 + std::size_t(action) * s.fc2;
    g[layout_.b5 + action] += scale;
    for (int k = 0; k < s.fc2; ++k) {
      gw[k] += scale * act.a4[k];
      d4[k] = act.z4[k] > 0.0 ? scale * w[k] : 0.0;
    }
  }

  std::vector<double> d3(s.fc1, 0.0);
  for (int i = 0; i < s.fc2; ++i) {
    if (d4[i] == 0.0) continue;
    g[layout_.b4 + i] += d4[i];
    const double* w = p + layout_.w4 + std::size_t(i) * s.fc1;
    double* gw = g + layout_.w4 + std::size_t(i) * s.fc1;
    for (int k = 0; k < s.fc1; ++k) {
      gw[k] += d4[i] * act.a3[k];
      d3[k] += d4[i] * w[k];
    }
  }
  for (int k = 0; k < s.fc1; ++k)
    if (act.z3[k] <= 0.0) d3[k] = 0.0;

  std::vector<double> d2(F, 0.0);
  for (int i = 0; i < s.fc1; ++i) {
    if (d3[i] == 0.0) continue;
    g[layout_.b3 + i] += d3[i];
    const double* w = p + layout_.w3 + std::size_t(i) * F;
    double* gw = g + layout_.w3 + std::size_t(i) * F;
    for (int k = 0; k < F; ++k) {
      gw[k] += d3[i] * act.a2[k];
      d2[k] += d3[i] * w[k];
    }
  }
  for (int k = 0; k < F; ++k)
    if (act.z2[k] <= 0.0) d2[k] = 0.0;

  std::vector<double> d1(std::size_t(s.conv1) * L1, 0.0);
  for (int o = 0; o < s.conv2; ++o)
    for (int t = 0; t < L2; ++t) {
      const double d = d2[std::size_t(o) * L2 + t];
      if (d == 0.0) continue;
      g[layout_.b2 + o] += d;
      for (int c = 0; c < s.conv1; ++c) {
        const std::size_t wi = layout_.w2 + (std::size_t(o) * s.conv1 + c) * K;
        for (int j = 0; j < K; ++j) {
          g[wi + j] += d * act.a1[std::size_t(c) * L1 + t + j];
          d1[std::size_t(c) * L1 + t + j] += d * p[wi + j];
        }
      }
    }
  for (std::size_t k = 0; k < d1.size(); ++k)
    if (act.z1[k] <= 0.0) d1[k] = 0.0;

  for (int o = 0; o < s.conv1; ++o)
    for (int t = 0; t < L1; ++t) {
      const double d = d1[std::size_t(o) * L1 + t];
      if (d == 0.0) continue;
      g[layout_.b1 + o] += d;
      for (int c = 0; c < C; ++c)
        for (int j = 0; j < K; ++j)
          g[layout_.w1 + (std::size_t(o) * C + c) * K + j] += d * x[std::size_t(t + j) * C + c];
    }
}

std::vector<QNetwork::Tensor> QNetwork::tensors() const {
  const auto& l = layout_;
  return {{"conv1.weight", l.w1, l.b1 - l.w1}, {"conv1.bias", l.b1, l.w2 - l.b1},
          {"conv2.weight", l.w2, l.b2 - l.w2}, {"conv2.bias", l.b2, l.w3 - l.b2},
          {"fc1.weight", l.w3, l.b3 - l.w3},   {"fc1.bias", l.b3, l.w4 - l.b3},
          {"fc2.weight", l.w4, l.b4 - l.w4},   {"fc2.bias", l.b4, l.w5 - l.b4},
          {"head.weight", l.w5, l.b5 - l.w5},  {"head.bias", l.b5, l.total - l.b5}};
}

void QNetwork::save_binary(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (double v : params_) {
    const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(v));
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

QNetwork QNetwork::load_binary(const QNetShape& shape, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<double> params;
  std::uint64_t bits = 0;
  while (in.read(reinterpret_cast<char*>(&bits), sizeof bits))
    params.push_back(std::bit_cast<double>(to_little(bits)));
  return QNetwork(shape, std::move(params));
}

}  // namespace platoon
