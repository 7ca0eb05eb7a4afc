#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pis/core.hpp"
#include "pis/gmm.hpp"

// Weight file layout ("PISMDN1"), all integers uint32 and all values float32, little-endian:
//
//   magic      7 bytes  "PISMDN1"
//   header     H, K, hidden, layers, tensor_count
//   tensors    tensor_count x { name_len, name bytes, rank, dims[rank], data[prod(dims)] }
//
// Tensors (row-major, gate order input/forget/cell/output as in PyTorch's nn.LSTM):
//   lstm.weight_ih_l{n}  [4*hidden, in]   in = 2 for n = 0, hidden otherwise
//   lstm.weight_hh_l{n}  [4*hidden, hidden]
//   lstm.bias_ih_l{n}    [4*hidden]
//   lstm.bias_hh_l{n}    [4*hidden]
//   mdn.pi.weight        [K, hidden]        mdn.pi.bias        [K]
//   mdn.mu.weight        [2K, hidden]       mdn.mu.bias        [2K]   (dx0, dy0, dx1, dy1, ...)
//   mdn.log_sigma.weight [2K, hidden]       mdn.log_sigma.bias [2K]   (same interleaving)

namespace pis {

inline constexpr char kMdnMagic[] = "PISMDN1";
inline constexpr std::size_t kMdnMagicLength = 7;
inline constexpr std::uint32_t kMdnInputSize = 2;

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t numel() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

struct MdnWeights {
  std::uint32_t history_length = 8;
  std::uint32_t components = 5;
  std::uint32_t hidden = 128;
  std::uint32_t layers = 2;
  std::map<std::string, Tensor> tensors;

  const Tensor& at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ConfigError("mdn weights: missing tensor '" + name + "'");
    return it->second;
  }

  /// Checks every expected tensor is present with the right shape and finite values.
  void validate() const {
    if (history_length < 1 || components < 1 || hidden < 1 || layers < 1)
      throw ConfigError("mdn weights: H, K, hidden and layers must all be >= 1");
    auto expect = [&](const std::string& name, std::vector<std::uint32_t> dims) {
      const Tensor& t = at(name);
      if (t.dims != dims) throw ConfigError("mdn weights: tensor '" + name + "' has the wrong shape");
      if (t.data.size() != t.numel()) throw ConfigError("mdn weights: tensor '" + name + "' has the wrong size");
      for (float v : t.data)
        if (!std::isfinite(v)) throw ConfigError("mdn weights: tensor '" + name + "' has non-finite values");
    };
    for (std::uint32_t n = 0; n < layers; ++n) {
      const std::string s = std::to_string(n);
      const std::uint32_t in = n == 0 ? kMdnInputSize : hidden;
      expect("lstm.weight_ih_l" + s, {4 * hidden, in});
      expect("lstm.weight_hh_l" + s, {4 * hidden, hidden});
      expect("lstm.bias_ih_l" + s, {4 * hidden});
      expect("lstm.bias_hh_l" + s, {4 * hidden});
    }
    expect("mdn.pi.weight", {components, hidden});
    expect("mdn.pi.bias", {components});
    expect("mdn.mu.weight", {2 * components, hidden});
    expect("mdn.mu.bias", {2 * components});
    expect("mdn.log_sigma.weight", {2 * components, hidden});
    expect("mdn.log_sigma.bias", {2 * components});
  }
};

/// All-zero weights of the given shape.
inline MdnWeights zero_mdn_weights(std::uint32_t h, std::uint32_t k, std::uint32_t hidden, std::uint32_t layers) {
  MdnWeights w{h, k, hidden, layers, {}};
  auto put = [&](const std::string& name, std::vector<std::uint32_t> dims) {
    Tensor t{std::move(dims), {}};
    t.data.assign(t.numel(), 0.0f);
    w.tensors[name] = std::move(t);
  };
  for (std::uint32_t n = 0; n < layers; ++n) {
    const std::string s = std::to_string(n);
    put("lstm.weight_ih_l" + s, {4 * hidden, n == 0 ? kMdnInputSize : hidden});
    put("lstm.weight_hh_l" + s, {4 * hidden, hidden});
    put("lstm.bias_ih_l" + s, {4 * hidden});
    put("lstm.bias_hh_l" + s, {4 * hidden});
  }
  put("mdn.pi.weight", {k, hidden});
  put("mdn.pi.bias", {k});
  put("mdn.mu.weight", {2 * k, hidden});
  put("mdn.mu.bias", {2 * k});
  put("mdn.log_sigma.weight", {2 * k, hidden});
  put("mdn.log_sigma.bias", {2 * k});
  return w;
}

namespace detail {

class ByteReader {
 public:
  explicit ByteReader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ConfigError("mdn weights: file truncated");
  }
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

inline void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b, 4);
}

}  // namespace detail

inline MdnWeights load_mdn_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("mdn weights: cannot open '" + path + "'");
  detail::ByteReader r(std::vector<char>(std::istreambuf_iterator<char>(in), {}));
  if (r.str(kMdnMagicLength) != std::string(kMdnMagic, kMdnMagicLength))
    throw ConfigError("mdn weights: bad magic in '" + path + "'");
  MdnWeights w;
  w.history_length = r.u32();
  w.components = r.u32();
  w.hidden = r.u32();
  w.layers = r.u32();
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str(r.u32());
    Tensor t;
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw ConfigError("mdn weights: tensor '" + name + "' has implausible rank");
    for (std::uint32_t d = 0; d < rank; ++d) t.dims.push_back(r.u32());
    const std::size_t n = t.numel();
    t.data.reserve(n);
    for (std::size_t j = 0; j < n; ++j) t.data.push_back(r.f32());
    w.tensors[name] = std::move(t);
  }
  if (!r.done()) throw ConfigError("mdn weights: trailing bytes after last tensor");
  w.validate();
  return w;
}

inline void save_mdn_weights(const MdnWeights& w, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("mdn weights: cannot write '" + path + "'");
  out.write(kMdnMagic, kMdnMagicLength);
  for (auto v : {w.history_length, w.components, w.hidden, w.layers, static_cast<std::uint32_t>(w.tensors.size())})
    detail::put_u32(out, v);
  for (const auto& [name, t] : w.tensors) {
    detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) detail::put_u32(out, d);
    for (float v : t.data) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
}

namespace detail {

// y = W x + b for a row-major [rows, cols] tensor.
inline void affine(const Tensor& w, const Tensor& b, std::span<const double> x, std::span<double> y) {
  const std::size_t rows = w.dims[0];
  const std::size_t cols = w.dims[1];
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = b.data[i];
    const float* row = w.data.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) acc += static_cast<double>(row[j]) * x[j];
    y[i] = acc;
  }
}

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace detail

inline constexpr double kMaxLogSigma = 30.0;

/// Forward pass of the stacked LSTM over a velocity history (oldest first) followed by the
/// mixture head. Means are displacements added to `anchor`.
inline GaussianMixture2D mdn_infer(std::span<const Vec2> history, const MdnWeights& w, Vec2 anchor) {
  if (history.size() != w.history_length)
    throw ConfigError("mdn_infer: history has " + std::to_string(history.size()) + " entries, weights expect " +
                      std::to_string(w.history_length));
  const std::size_t hid = w.hidden;
  std::vector<std::vector<double>> sequence(history.size());
  for (std::size_t t = 0; t < history.size(); ++t) sequence[t] = {history[t].x, history[t].y};

  std::vector<double> gates(4 * hid), recur(4 * hid);
  for (std::uint32_t n = 0; n < w.layers; ++n) {
    const std::string s = std::to_string(n);
    const Tensor& w_ih = w.at("lstm.weight_ih_l" + s);
    const Tensor& w_hh = w.at("lstm.weight_hh_l" + s);
    const Tensor& b_ih = w.at("lstm.bias_ih_l" + s);
    const Tensor& b_hh = w.at("lstm.bias_hh_l" + s);
    std::vector<double> h(hid, 0.0), c(hid, 0.0);
    for (auto& x : sequence) {
      detail::affine(w_ih, b_ih, x, gates);
      detail::affine(w_hh, b_hh, h, recur);
      for (std::size_t j = 0; j < hid; ++j) {
        const double i_gate = detail::sigmoid(gates[j] + recur[j]);
        const double f_gate = detail::sigmoid(gates[hid + j] + recur[hid + j]);
        const double g_gate = std::tanh(gates[2 * hid + j] + recur[2 * hid + j]);
        const double o_gate = detail::sigmoid(gates[3 * hid + j] + recur[3 * hid + j]);
        c[j] = f_gate * c[j] + i_gate * g_gate;
        h[j] = o_gate * std::tanh(c[j]);
      }
      x = h;  // becomes the next layer's input at this time step
    }
  }
  const std::vector<double>& top = sequence.back();

  const std::size_t k_count = w.components;
  std::vector<double> logits(k_count), mu(2 * k_count), log_sigma(2 * k_count);
  detail::affine(w.at("mdn.pi.weight"), w.at("mdn.pi.bias"), top, logits);
  detail::affine(w.at("mdn.mu.weight"), w.at("mdn.mu.bias"), top, mu);
  detail::affine(w.at("mdn.log_sigma.weight"), w.at("mdn.log_sigma.bias"), top, log_sigma);

  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  std::vector<double> pi(k_count);
  for (std::size_t k = 0; k < k_count; ++k) total += pi[k] = std::exp(logits[k] - peak);

  std::vector<GaussianComponent> comps;
  comps.reserve(k_count);
  double weight_sum = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    const double weight = std::max(pi[k] / total, std::numeric_limits<double>::min());
    weight_sum += weight;
    comps.push_back({weight,
                     {anchor.x + mu[2 * k], anchor.y + mu[2 * k + 1]},
                     std::exp(std::clamp(log_sigma[2 * k], -kMaxLogSigma, kMaxLogSigma)),
                     std::exp(std::clamp(log_sigma[2 * k + 1], -kMaxLogSigma, kMaxLogSigma))});
  }
  for (auto& comp : comps) comp.weight /= weight_sum;
  return GaussianMixture2D(std::move(comps));
}

}  // namespace pis
