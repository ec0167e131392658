#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rw/core.hpp"

namespace rw {

enum class Normalization { none, per_NK, per_N };

inline const char* normalization_name(Normalization n) {
  switch (n) {
    case Normalization::none: return "none";
    case Normalization::per_NK: return "per_NK";
    case Normalization::per_N: return "per_N";
  }
  return "?";
}

struct LossValue {
  double value = 0.0;
  Normalization normalization = Normalization::none;
  std::vector<double> per_class;  // optional breakdown; empty when not computed
};

namespace detail {

inline double norm_scale(Normalization n, Index pixels, int channels) {
  switch (n) {
    case Normalization::none: return 1.0;
    case Normalization::per_NK: return 1.0 / (double(pixels) * channels);
    case Normalization::per_N: return 1.0 / double(pixels);
  }
  return 1.0;
}

// Clamp floor for log arguments and their reciprocals in the cross-entropy
// family: bounds the loss on saturated-wrong predictions while leaving the
// operating regime untouched.
constexpr double kLogClamp = 1e-12;

inline double clamped(double p) { return std::max(p, kLogClamp); }

}  // namespace detail

// Numerically stable softmax: rows are shifted by their max before
// exponentiation, so adding a constant to a pixel's logits is a no-op.
inline ProbField softmax(const LogitField& phi) {
  ProbField out(phi.dims, phi.channels, phi.spacing);
  const Index n = phi.pixels();
  const int K = phi.channels;
  for (Index i = 0; i < n; ++i) {
    auto in = phi.pixel(i);
    auto p = out.pixel(i);
    double m = in[0];
    for (int k = 1; k < K; ++k) m = std::max(m, in[k]);
    double s = 0.0;
    for (int k = 0; k < K; ++k) {
      p[k] = std::exp(in[k] - m);
      s += p[k];
    }
    for (int k = 0; k < K; ++k) p[k] /= s;
  }
  return out;
}

// J[k][l] = dp_k/dphi_l for one pixel: diag p(1-p), off-diagonal -p_k p_l.
inline std::vector<double> softmax_jacobian(std::span<const double> p) {
  const int K = static_cast<int>(p.size());
  std::vector<double> j(static_cast<std::size_t>(K) * K);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < K; ++l)
      j[static_cast<std::size_t>(k) * K + l] =
          k == l ? p[k] * (1.0 - p[k]) : -p[k] * p[l];
  return j;
}

// Per-pixel RW gradient wrt logits, literal double-sum form:
//   g_k = sum_{l != k} (p_k p_l) (z_k - z_l).
// The probability product is taken first so the K = 2 gradient is exactly
// symmetric under swapping the two probabilities.
inline void rw_pixel_grad(std::span<const double> p, std::span<const double> z,
                          std::span<double> g) {
  const int K = static_cast<int>(p.size());
  for (int k = 0; k < K; ++k) {
    double acc = 0.0;
    for (int l = 0; l < K; ++l)
      if (l != k) acc += p[k] * p[l] * (z[k] - z[l]);
    g[k] = acc;
  }
}

// Chain an upstream dL/dp through the softmax at one pixel:
//   dL/dphi_k = p_k (g_k - <g, p>).
inline void chain_softmax(std::span<const double> p, std::span<const double> dldp,
                          std::span<double> out) {
  const int K = static_cast<int>(p.size());
  double dot = 0.0;
  for (int k = 0; k < K; ++k) dot += dldp[k] * p[k];
  for (int k = 0; k < K; ++k) out[k] = p[k] * (dldp[k] - dot);
}

// L_RW = sum_i <p_i, z_i>, scaled by the chosen normalization.
inline LossValue rw_loss(const ProbField& p, const RWMap& z,
                         Normalization norm = Normalization::per_NK) {
  require_same_grid(p, z, "rw_loss");
  double s = 0.0;
  const Index n = p.pixels();
  const int K = p.channels;
  for (Index i = 0; i < n; ++i) {
    auto pi = p.pixel(i);
    auto zi = z.pixel(i);
    for (int k = 0; k < K; ++k) s += pi[k] * zi[k];
  }
  return {s * detail::norm_scale(norm, n, K), norm, {}};
}

inline LogitField rw_loss_grad(const ProbField& p, const RWMap& z,
                               Normalization norm = Normalization::per_NK) {
  require_same_grid(p, z, "rw_loss_grad");
  LogitField g(p.dims, p.channels, p.spacing);
  const Index n = p.pixels();
  const double scale = detail::norm_scale(norm, n, p.channels);
  for (Index i = 0; i < n; ++i) {
    auto gi = g.pixel(i);
    rw_pixel_grad(p.pixel(i), z.pixel(i), gi);
    if (scale != 1.0)
      for (double& v : gi) v *= scale;
  }
  return g;
}

// L_RW2 = (1/N) sum_i <p_i^2, z_i> (element-wise square).
inline LossValue rw2_loss(const ProbField& p, const RWMap& z) {
  require_same_grid(p, z, "rw2_loss");
  double s = 0.0;
  const Index n = p.pixels();
  const int K = p.channels;
  for (Index i = 0; i < n; ++i) {
    auto pi = p.pixel(i);
    auto zi = z.pixel(i);
    for (int k = 0; k < K; ++k) s += pi[k] * pi[k] * zi[k];
  }
  return {s / double(n), Normalization::per_N, {}};
}

inline LogitField rw2_loss_grad(const ProbField& p, const RWMap& z) {
  require_same_grid(p, z, "rw2_loss_grad");
  LogitField g(p.dims, p.channels, p.spacing);
  const Index n = p.pixels();
  const int K = p.channels;
  const double scale = 2.0 / double(n);
  std::vector<double> dldp(K);
  for (Index i = 0; i < n; ++i) {
    auto pi = p.pixel(i);
    auto zi = z.pixel(i);
    // dL/dp_k = (2/N) p_k z_k, then chain through the softmax.
    for (int k = 0; k < K; ++k) dldp[k] = scale * pi[k] * zi[k];
    chain_softmax(pi, dldp, g.pixel(i));
  }
  return g;
}

// Pixel-weighted cross entropy: -(1/N) sum_{i,k} w_ik y_ik log p_ik. Only the
// true-class weight of each pixel participates (y is one-hot).
inline LossValue pwce_loss(const ProbField& p, const OneHot& y, const Field& w) {
  require_same_grid(p, y, "pwce_loss");
  require_same_grid(p, w, "pwce_loss weights");
  double s = 0.0;
  const Index n = p.pixels();
  const int K = p.channels;
  for (Index i = 0; i < n; ++i) {
    auto pi = p.pixel(i);
    auto yi = y.pixel(i);
    auto wi = w.pixel(i);
    for (int k = 0; k < K; ++k) {
      if (yi[k] == 0.0) continue;
      if (wi[k] < 0.0) throw DomainError("pwce weights must be nonnegative");
      s -= wi[k] * yi[k] * std::log(detail::clamped(pi[k]));
    }
  }
  return {s / double(n), Normalization::per_N, {}};
}

// Gradient of pwce wrt logits: (1/N) (-w_ik y_ik + p_ik sum_l w_il y_il).
inline LogitField pwce_grad(const ProbField& p, const OneHot& y, const Field& w) {
  require_same_grid(p, y, "pwce_grad");
  require_same_grid(p, w, "pwce_grad weights");
  LogitField g(p.dims, p.channels, p.spacing);
  const Index n = p.pixels();
  const int K = p.channels;
  const double scale = 1.0 / double(n);
  for (Index i = 0; i < n; ++i) {
    auto pi = p.pixel(i);
    auto yi = y.pixel(i);
    auto wi = w.pixel(i);
    auto gi = g.pixel(i);
    double wy = 0.0;
    for (int l = 0; l < K; ++l) {
      if (yi[l] != 0.0 && wi[l] < 0.0)
        throw DomainError("pwce weights must be nonnegative");
      wy += wi[l] * yi[l];
    }
    for (int k = 0; k < K; ++k) gi[k] = scale * (pi[k] * wy - wi[k] * yi[k]);
  }
  return g;
}

// Soft Dice loss averaged over all K classes:
//   L = (1/K) sum_c [ 1 - (2 sum_i p_ic y_ic + eps) / (sum_i (p_ic + y_ic) + eps) ].
inline LossValue dice_loss(const ProbField& p, const OneHot& y,
                           double eps = 1e-5) {
  require_same_grid(p, y, "dice_loss");
  if (!(eps > 0.0)) throw DomainError("dice eps must be positive");
  const Index n = p.pixels();
  const int K = p.channels;
  std::vector<double> inter(K, 0.0), denom(K, 0.0);
  for (Index i = 0; i < n; ++i) {
    auto pi = p.pixel(i);
    auto yi = y.pixel(i);
    for (int k = 0; k < K; ++k) {
      inter[k] += pi[k] * yi[k];
      denom[k] += pi[k] + yi[k];
    }
  }
  LossValue out;
  out.normalization = Normalization::none;
  out.per_class.resize(K);
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    out.per_class[k] = 1.0 - (2.0 * inter[k] + eps) / (denom[k] + eps);
    total += out.per_class[k];
  }
  out.value = total / K;
  return out;
}

inline LogitField dice_loss_grad(const ProbField& p, const OneHot& y,
                                 double eps = 1e-5) {
  require_same_grid(p, y, "dice_loss_grad");
  if (!(eps > 0.0)) throw DomainError("dice eps must be positive");
  const Index n = p.pixels();
  const int K = p.channels;
  std::vector<double> inter(K, 0.0), denom(K, 0.0);
  for (Index i = 0; i < n; ++i) {
    auto pi = p.pixel(i);
    auto yi = y.pixel(i);
    for (int k = 0; k < K; ++k) {
      inter[k] += pi[k] * yi[k];
      denom[k] += pi[k] + yi[k];
    }
  }
  LogitField g(p.dims, p.channels, p.spacing);
  std::vector<double> num(K), inv2(K), dldp(K);
  for (int k = 0; k < K; ++k) {
    num[k] = 2.0 * inter[k] + eps;
    const double d = denom[k] + eps;
    inv2[k] = 1.0 / (d * d);
  }
  for (Index i = 0; i < n; ++i) {
    auto pi = p.pixel(i);
    auto yi = y.pixel(i);
    // d/dp_ic of -(2 S_c + eps)/(D_c + eps): quotient rule with dS = y_ic,
    // dD = 1, then the 1/K class average.
    for (int k = 0; k < K; ++k)
      dldp[k] = (num[k] - 2.0 * yi[k] * (denom[k] + eps)) * inv2[k] / K;
    chain_softmax(pi, dldp, g.pixel(i));
  }
  return g;
}

// Focal loss on the true class: -(alpha/N) sum_i (1 - p_t)^gamma log p_t.
inline LossValue focal_loss(const ProbField& p, const OneHot& y,
                            double gamma = 2.0, double alpha = 1.0) {
  require_same_grid(p, y, "focal_loss");
  if (!(gamma >= 0.0) || !(alpha > 0.0))
    throw DomainError("focal loss needs gamma >= 0 and alpha > 0");
  const Index n = p.pixels();
  const int K = p.channels;
  double s = 0.0;
  for (Index i = 0; i < n; ++i) {
    auto pi = p.pixel(i);
    auto yi = y.pixel(i);
    for (int k = 0; k < K; ++k) {
      if (yi[k] == 0.0) continue;
      const double pt = pi[k];
      s -= std::pow(1.0 - pt, gamma) * std::log(detail::clamped(pt));
    }
  }
  return {alpha * s / double(n), Normalization::per_N, {}};
}

inline LogitField focal_loss_grad(const ProbField& p, const OneHot& y,
                                  double gamma = 2.0, double alpha = 1.0) {
  require_same_grid(p, y, "focal_loss_grad");
  if (!(gamma >= 0.0) || !(alpha > 0.0))
    throw DomainError("focal loss needs gamma >= 0 and alpha > 0");
  const Index n = p.pixels();
  const int K = p.channels;
  LogitField g(p.dims, p.channels, p.spacing);
  const double scale = alpha / double(n);
  std::vector<double> dldp(K);
  for (Index i = 0; i < n; ++i) {
    auto pi = p.pixel(i);
    auto yi = y.pixel(i);
    for (int k = 0; k < K; ++k) dldp[k] = 0.0;
    for (int k = 0; k < K; ++k) {
      if (yi[k] == 0.0) continue;
      const double pt = pi[k];
      const double q = 1.0 - pt;
      // d/dp [-(1-p)^g log p] = g (1-p)^(g-1) log p - (1-p)^g / p.
      double d = -std::pow(q, gamma) / detail::clamped(pt);
      if (gamma > 0.0)
        d += gamma * std::pow(q, gamma - 1.0) *
             std::log(detail::clamped(pt));
      dldp[k] = scale * d;
    }
    chain_softmax(pi, dldp, g.pixel(i));
  }
  return g;
}

// Two-partner loss combination schedule. Equal mode keeps unit weights on
// both partners. Gradual mode weights partner A by alpha(epoch), linearly
// decreasing from alpha_start at epoch 0 to alpha_end at epoch E-1 (the
// endpoints are hit exactly), and partner B by 1 - alpha(epoch).
enum class CombineMode { equal, gradual };

struct CombinedSchedule {
  CombineMode mode = CombineMode::gradual;
  double alpha_start = 1.0;
  double alpha_end = 0.01;
  int epochs = 50;
};

inline std::pair<double, double> schedule_weights(const CombinedSchedule& s,
                                                  int epoch) {
  if (epoch < 0 || epoch >= s.epochs)
    throw DomainError("schedule epoch " + std::to_string(epoch) +
                      " outside [0, " + std::to_string(s.epochs) + ")");
  if (s.mode == CombineMode::equal) return {1.0, 1.0};
  if (s.epochs < 2)
    throw ConfigError("gradual schedule needs at least 2 epochs");
  double a;
  if (epoch == 0)
    a = s.alpha_start;
  else if (epoch == s.epochs - 1)
    a = s.alpha_end;
  else
    a = s.alpha_start +
        (s.alpha_end - s.alpha_start) * (double(epoch) / (s.epochs - 1));
  return {a, 1.0 - a};
}

struct LossAndGrad {
  LossValue value;
  LogitField grad;
};

inline LossAndGrad combined_loss(const CombinedSchedule& s, int epoch,
                                 const LossAndGrad& a, const LossAndGrad& b) {
  auto [wa, wb] = schedule_weights(s, epoch);
  require_same_grid(a.grad, b.grad, "combined_loss");
  LossAndGrad out;
  out.value.value = wa * a.value.value + wb * b.value.value;
  out.value.normalization = Normalization::none;
  out.grad = a.grad;
  for (std::size_t i = 0; i < out.grad.values.size(); ++i)
    out.grad.values[i] = wa * a.grad.values[i] + wb * b.grad.values[i];
  return out;
}

}  // namespace rw
