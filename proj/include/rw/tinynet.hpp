#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rw/core.hpp"
#include "rw/rng.hpp"

namespace rw {

// Upper bound on channels per conv layer; keeps per-pixel accumulators on the
// stack in the hot loops.
constexpr int kMaxConvChannels = 64;

// Same-padded 2-D convolution layer. Weights are stored kernel-position
// major with the output channel fastest:
//   w[((ky * k + kx) * in_c + ic) * out_c + oc]
// which lets the inner loops run contiguously over output channels.
struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  int ksize = 1;
  std::vector<double> w;
  std::vector<double> b;

  ConvLayer() = default;
  ConvLayer(int in_c, int out_c, int k) : in_channels(in_c), out_channels(out_c), ksize(k) {
    if (in_c < 1 || out_c < 1 || in_c > kMaxConvChannels || out_c > kMaxConvChannels)
      throw ConfigError("conv channels out of supported range");
    if (k != 1 && k != 3) throw ConfigError("conv kernel must be 1x1 or 3x3");
    w.assign(static_cast<std::size_t>(k) * k * in_c * out_c, 0.0);
    b.assign(out_c, 0.0);
  }

  std::size_t windex(int ky, int kx, int ic, int oc) const {
    return ((static_cast<std::size_t>(ky) * ksize + kx) * in_channels + ic) *
               out_channels + oc;
  }
};

inline void conv_forward(const ConvLayer& L, const double* in, int H, int W,
                         double* out) {
  const int IC = L.in_channels, OC = L.out_channels, k = L.ksize, pad = k / 2;
  std::array<double, kMaxConvChannels> acc;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      for (int oc = 0; oc < OC; ++oc) acc[oc] = L.b[oc];
      for (int ky = 0; ky < k; ++ky) {
        const int yy = y + ky - pad;
        if (yy < 0 || yy >= H) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int xx = x + kx - pad;
          if (xx < 0 || xx >= W) continue;
          const double* ip = in + (static_cast<std::size_t>(yy) * W + xx) * IC;
          const double* wp =
              L.w.data() + (static_cast<std::size_t>(ky) * k + kx) * IC * OC;
          for (int ic = 0; ic < IC; ++ic) {
            const double v = ip[ic];
            const double* wrow = wp + static_cast<std::size_t>(ic) * OC;
            for (int oc = 0; oc < OC; ++oc) acc[oc] += v * wrow[oc];
          }
        }
      }
      double* op = out + (static_cast<std::size_t>(y) * W + x) * OC;
      for (int oc = 0; oc < OC; ++oc) op[oc] = acc[oc];
    }
}

// Accumulates (+=) into dw/db; when din is non-null it must point at a
// zero-initialized buffer of the layer's input shape.
inline void conv_backward(const ConvLayer& L, const double* in, int H, int W,
                          const double* dout, double* dw, double* db,
                          double* din) {
  const int IC = L.in_channels, OC = L.out_channels, k = L.ksize, pad = k / 2;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const double* dop = dout + (static_cast<std::size_t>(y) * W + x) * OC;
      for (int oc = 0; oc < OC; ++oc) db[oc] += dop[oc];
      for (int ky = 0; ky < k; ++ky) {
        const int yy = y + ky - pad;
        if (yy < 0 || yy >= H) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int xx = x + kx - pad;
          if (xx < 0 || xx >= W) continue;
          const std::size_t in_off = (static_cast<std::size_t>(yy) * W + xx) * IC;
          const std::size_t w_off =
              (static_cast<std::size_t>(ky) * k + kx) * IC * OC;
          const double* ip = in + in_off;
          double* dwp = dw + w_off;
          for (int ic = 0; ic < IC; ++ic) {
            const double v = ip[ic];
            double* dwrow = dwp + static_cast<std::size_t>(ic) * OC;
            for (int oc = 0; oc < OC; ++oc) dwrow[oc] += v * dop[oc];
          }
          if (din) {
            const double* wp = L.w.data() + w_off;
            double* dip = din + in_off;
            for (int ic = 0; ic < IC; ++ic) {
              const double* wrow = wp + static_cast<std::size_t>(ic) * OC;
              double s = 0.0;
              for (int oc = 0; oc < OC; ++oc) s += wrow[oc] * dop[oc];
              dip[ic] += s;
            }
          }
        }
      }
    }
}

// Fixed four-layer fully convolutional net:
// conv3x3(1->8) + ReLU, conv3x3(8->16) + ReLU, conv3x3(16->8) + ReLU,
// conv1x1(8->K). Same padding throughout, so logits keep the input's
// spatial dims. Double precision; hidden layers are He-initialized, the
// 1x1 head starts at zero so every class begins at the uniform softmax
// point, and all biases start at zero.
struct TinyNet {
  int num_classes = 0;
  std::vector<ConvLayer> layers;

  static TinyNet make(int num_classes, std::uint64_t seed) {
    if (num_classes < 2 || num_classes > kMaxConvChannels)
      throw ConfigError("TinyNet needs 2..64 classes");
    TinyNet net;
    net.num_classes = num_classes;
    net.layers = {ConvLayer(1, 8, 3), ConvLayer(8, 16, 3), ConvLayer(16, 8, 3),
                  ConvLayer(8, num_classes, 1)};
    for (std::size_t li = 0; li + 1 < net.layers.size(); ++li) {
      ConvLayer& L = net.layers[li];
      Rng rng(mix_seed(seed, 0xC0 + li));
      const double fan_in = double(L.ksize) * L.ksize * L.in_channels;
      const double sd = std::sqrt(2.0 / fan_in);
      for (double& v : L.w) v = rng.normal() * sd;
    }
    return net;
  }

  Index parameter_count() const {
    Index n = 0;
    for (const auto& L : layers)
      n += static_cast<Index>(L.w.size() + L.b.size());
    return n;
  }
};

// Post-ReLU activations of the three hidden layers, kept for backprop.
struct NetActivations {
  int h = 0, w = 0;
  std::array<std::vector<double>, 3> post;
};

// Forward pass over a single-channel 2-D image field. Pass a cache to keep
// the hidden activations for a subsequent backward().
inline LogitField net_forward(const TinyNet& net, const Field& image,
                              NetActivations* cache = nullptr) {
  if (image.ndim() != 2 || image.channels != 1)
    throw ShapeError("net_forward expects a single-channel 2-D image");
  const int H = image.dims[0], W = image.dims[1];
  const std::size_t hw = static_cast<std::size_t>(H) * W;

  NetActivations local;
  NetActivations& acts = cache ? *cache : local;
  acts.h = H;
  acts.w = W;

  const double* cur = image.values.data();
  for (int li = 0; li < 3; ++li) {
    auto& buf = acts.post[li];
    buf.assign(hw * net.layers[li].out_channels, 0.0);
    conv_forward(net.layers[li], cur, H, W, buf.data());
    for (double& v : buf) v = v > 0.0 ? v : 0.0;
    cur = buf.data();
  }
  LogitField logits(image.dims, net.num_classes, image.spacing);
  conv_forward(net.layers[3], cur, H, W, logits.values.data());
  return logits;
}

// Per-layer parameter gradients, same shapes as the layers they belong to.
struct NetGrads {
  std::vector<std::vector<double>> w, b;

  static NetGrads zeros_like(const TinyNet& net) {
    NetGrads g;
    for (const auto& L : net.layers) {
      g.w.emplace_back(L.w.size(), 0.0);
      g.b.emplace_back(L.b.size(), 0.0);
    }
    return g;
  }

  void add(const NetGrads& o) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      for (std::size_t j = 0; j < w[i].size(); ++j) w[i][j] += o.w[i][j];
      for (std::size_t j = 0; j < b[i].size(); ++j) b[i][j] += o.b[i][j];
    }
  }

  void scale(double c) {
    for (auto& lw : w)
      for (double& v : lw) v *= c;
    for (auto& lb : b)
      for (double& v : lb) v *= c;
  }

  bool finite() const {
    for (const auto& lw : w)
      for (double v : lw)
        if (!std::isfinite(v)) return false;
    for (const auto& lb : b)
      for (double v : lb)
        if (!std::isfinite(v)) return false;
    return true;
  }
};

// Exact backprop of dL/dlogits to all parameters. `acts` must come from a
// net_forward call on the same net and image.
inline NetGrads net_backward(const TinyNet& net, const Field& image,
                             const NetActivations& acts,
                             const LogitField& dlogits) {
  const int H = acts.h, W = acts.w;
  if (dlogits.dims != image.dims || dlogits.channels != net.num_classes)
    throw ShapeError("net_backward: upstream gradient shape mismatch");
  NetGrads g = NetGrads::zeros_like(net);
  const std::size_t hw = static_cast<std::size_t>(H) * W;

  std::vector<double> dcur(hw * net.layers[3].in_channels, 0.0);
  conv_backward(net.layers[3], acts.post[2].data(), H, W,
                dlogits.values.data(), g.w[3].data(), g.b[3].data(),
                dcur.data());
  for (int li = 2; li >= 0; --li) {
    // Through the ReLU: zero where the activation was clamped.
    const auto& post = acts.post[li];
    for (std::size_t i = 0; i < dcur.size(); ++i)
      if (post[i] <= 0.0) dcur[i] = 0.0;
    const double* layer_in = li == 0 ? image.values.data() : acts.post[li - 1].data();
    if (li == 0) {
      conv_backward(net.layers[0], layer_in, H, W, dcur.data(), g.w[0].data(),
                    g.b[0].data(), nullptr);
    } else {
      std::vector<double> dprev(hw * net.layers[li].in_channels, 0.0);
      conv_backward(net.layers[li], layer_in, H, W, dcur.data(),
                    g.w[li].data(), g.b[li].data(), dprev.data());
      dcur = std::move(dprev);
    }
  }
  return g;
}

// Adam optimizer (bias-corrected first/second moments). `weight_decay` is
// decoupled decay applied to conv weights only (never biases); the default 0
// makes the step the textbook Adam update.
struct AdamParams {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct AdamState {
  AdamParams hp;
  long step = 0;
  std::vector<std::vector<double>> m_w, v_w, m_b, v_b;

  static AdamState make(const TinyNet& net, AdamParams hp = {}) {
    AdamState st;
    st.hp = hp;
    for (const auto& L : net.layers) {
      st.m_w.emplace_back(L.w.size(), 0.0);
      st.v_w.emplace_back(L.w.size(), 0.0);
      st.m_b.emplace_back(L.b.size(), 0.0);
      st.v_b.emplace_back(L.b.size(), 0.0);
    }
    return st;
  }
};

inline void adam_step(AdamState& st, TinyNet& net, const NetGrads& g) {
  if (!g.finite())
    throw DomainError("adam_step: non-finite gradient");
  ++st.step;
  const double b1 = st.hp.beta1, b2 = st.hp.beta2;
  const double c1 = 1.0 - std::pow(b1, double(st.step));
  const double c2 = 1.0 - std::pow(b2, double(st.step));
  auto update = [&](std::vector<double>& p, const std::vector<double>& grad,
                    std::vector<double>& m, std::vector<double>& v,
                    bool decay) {
    const double wd = decay ? st.hp.lr * st.hp.weight_decay : 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= st.hp.lr * mhat / (std::sqrt(vhat) + st.hp.eps) + wd * p[i];
    }
  };
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    update(net.layers[li].w, g.w[li], st.m_w[li], st.v_w[li], true);
    update(net.layers[li].b, g.b[li], st.m_b[li], st.v_b[li], false);
  }
}

}  // namespace rw
