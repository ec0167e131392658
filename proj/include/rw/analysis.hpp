#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "rw/core.hpp"
#include "rw/edt.hpp"
#include "rw/loss.hpp"
#include "rw/rng.hpp"
#include "rw/rwmaps.hpp"

namespace rw {

// Tolerance below which a gradient component counts as strictly negative.
constexpr double kSignTol = 1e-12;

// Regular barycentric sweep of the (K-1)-simplex: every probability vector
// (a_1, ..., a_K) / R with nonnegative integer a summing to R = resolution.
// Rows of `probs`/`grads` are flat K-vectors, one per sample.
struct SimplexSweep {
  int num_classes = 0;
  int resolution = 0;
  std::vector<double> probs;
  std::vector<double> grads;
  std::vector<int> neg_count;
  std::vector<char> interior;  // 1 when every coordinate is > 0
  Index interior_count = 0;
  Index interior_two_neg = 0;
  double frac_two_negative = 0.0;  // over interior samples

  Index samples() const { return static_cast<Index>(neg_count.size()); }
};

inline SimplexSweep simplex_sweep(std::span<const double> z, int resolution) {
  const int K = static_cast<int>(z.size());
  if (K < 2) throw DomainError("simplex sweep needs K >= 2");
  if (resolution < 2) throw DomainError("simplex sweep needs resolution >= 2");
  for (double v : z)
    if (!std::isfinite(v)) throw DomainError("simplex sweep map not finite");

  SimplexSweep sw;
  sw.num_classes = K;
  sw.resolution = resolution;
  std::vector<int> a(K, 0);
  std::vector<double> p(K), g(K);

  auto emit = [&] {
    bool inside = true;
    for (int k = 0; k < K; ++k) {
      p[k] = double(a[k]) / resolution;
      if (a[k] == 0) inside = false;
    }
    rw_pixel_grad(p, z, g);
    int neg = 0;
    for (int k = 0; k < K; ++k)
      if (g[k] < -kSignTol) ++neg;
    sw.probs.insert(sw.probs.end(), p.begin(), p.end());
    sw.grads.insert(sw.grads.end(), g.begin(), g.end());
    sw.neg_count.push_back(neg);
    sw.interior.push_back(inside ? 1 : 0);
    if (inside) {
      ++sw.interior_count;
      if (neg >= 2) ++sw.interior_two_neg;
    }
  };

  // Enumerate compositions of `resolution` into K nonnegative parts.
  auto walk = [&](auto&& self, int slot, int left) -> void {
    if (slot == K - 1) {
      a[slot] = left;
      emit();
      return;
    }
    for (int v = 0; v <= left; ++v) {
      a[slot] = v;
      self(self, slot + 1, left - v);
    }
  };
  walk(walk, 0, resolution);

  sw.frac_two_negative =
      sw.interior_count ? double(sw.interior_two_neg) / sw.interior_count : 0.0;
  return sw;
}

inline void write_sweep_csv(std::ostream& out, const SimplexSweep& sw) {
  const int K = sw.num_classes;
  for (int k = 1; k <= K; ++k) out << "p" << k << ',';
  for (int k = 1; k <= K; ++k) out << "g" << k << ',';
  out << "neg_count\n";
  const auto n = sw.samples();
  out.precision(17);
  for (Index i = 0; i < n; ++i) {
    for (int k = 0; k < K; ++k) out << sw.probs[i * K + k] << ',';
    for (int k = 0; k < K; ++k) out << sw.grads[i * K + k] << ',';
    out << sw.neg_count[i] << '\n';
  }
}

// Per-pixel count of strictly negative gradient components of the RW loss
// under map Z at probabilities P; two or more means the loss is pushing two
// softmax components up at once.
struct SignReport {
  std::vector<int> dims;
  std::vector<double> spacing;
  std::vector<int> counts;       // per pixel
  std::vector<Index> histogram;  // histogram[c] = # pixels with count c
  Index pixels_two_or_more = 0;
  double frac_two_or_more = 0.0;
};

inline SignReport negcount(const ProbField& p, const RWMap& z) {
  require_same_grid(p, z, "negcount");
  const Index n = p.pixels();
  const int K = p.channels;
  SignReport rep;
  rep.dims = p.dims;
  rep.spacing = p.spacing;
  rep.counts.resize(static_cast<std::size_t>(n));
  rep.histogram.assign(K + 1, 0);
  std::vector<double> g(K);
  for (Index i = 0; i < n; ++i) {
    rw_pixel_grad(p.pixel(i), z.pixel(i), g);
    int neg = 0;
    for (int k = 0; k < K; ++k)
      if (g[k] < -kSignTol) ++neg;
    rep.counts[i] = neg;
    ++rep.histogram[neg];
    if (neg >= 2) ++rep.pixels_two_or_more;
  }
  rep.frac_two_or_more = n ? double(rep.pixels_two_or_more) / n : 0.0;
  return rep;
}

// The counts as a label-like grid (for visualization / RWG export).
inline LabelGrid sign_labels(const SignReport& rep, int num_classes) {
  std::vector<std::uint8_t> lab(rep.counts.size());
  for (std::size_t i = 0; i < lab.size(); ++i)
    lab[i] = static_cast<std::uint8_t>(rep.counts[i]);
  return LabelGrid(rep.dims, num_classes + 1, std::move(lab), rep.spacing);
}

inline void write_negcount_csv(std::ostream& out, const ProbField& p,
                               const RWMap& z) {
  require_same_grid(p, z, "negcount csv");
  const Index n = p.pixels();
  const int K = p.channels;
  for (int k = 1; k <= K; ++k) out << "p" << k << ',';
  for (int k = 1; k <= K; ++k) out << "g" << k << ',';
  out << "neg_count\n";
  out.precision(17);
  std::vector<double> g(K);
  for (Index i = 0; i < n; ++i) {
    auto pi = p.pixel(i);
    rw_pixel_grad(pi, z.pixel(i), g);
    int neg = 0;
    for (int k = 0; k < K; ++k)
      if (g[k] < -kSignTol) ++neg;
    for (int k = 0; k < K; ++k) out << pi[k] << ',';
    for (int k = 0; k < K; ++k) out << g[k] << ',';
    out << neg << '\n';
  }
}

// ---------------------------------------------------------------------------
// Equivalence oracles: each verifier evaluates the original published loss
// form directly (with its own brute-force distance evaluation where distances
// are involved) and compares it against the RW-map formulation on random
// binary instances. Discrepancies are absolute and bounded by 1e-12 * N.

struct PropCheck {
  int requested = 0;
  int ran = 0;
  int skipped = 0;  // degenerate instances (a class missing where required)
  double max_abs_discrepancy = 0.0;
  double max_bound_ratio = 0.0;  // discrepancy / (1e-12 * N), worst instance
  bool pass = true;
};

constexpr double kPropTolPerPixel = 1e-12;

namespace detail {

// Random 2-D/3-D dims: 2-D up to 16 x 16, 3-D up to 8^3.
inline std::vector<int> random_prop_dims(Rng& rng, bool allow_3d) {
  if (allow_3d && rng.coin())
    return {rng.uniform_int(2, 8), rng.uniform_int(2, 8), rng.uniform_int(2, 8)};
  return {rng.uniform_int(2, 16), rng.uniform_int(2, 16)};
}

inline std::vector<double> random_spacing(Rng& rng, std::size_t nd) {
  std::vector<double> s(nd);
  for (auto& v : s) v = rng.uniform(0.5, 2.0);
  return s;
}

// Random binary labels; occasionally saturated probabilities to cover the
// adversarial corners. The background probability is constructed as 1 - p so
// binary identities hold exactly in floating point.
inline LabelGrid random_binary_labels(Rng& rng, const std::vector<int>& dims,
                                      std::vector<double> spacing) {
  const Index n = element_count(dims);
  std::vector<std::uint8_t> lab(static_cast<std::size_t>(n));
  const double fg = rng.uniform(0.15, 0.85);
  for (auto& v : lab) v = rng.uniform() < fg ? 1 : 0;
  return LabelGrid(dims, 2, std::move(lab), std::move(spacing));
}

inline ProbField random_binary_probs(Rng& rng, const LabelGrid& g) {
  ProbField p(g.dims, 2, g.spacing);
  for (Index i = 0; i < g.pixels(); ++i) {
    double v = rng.uniform();
    const double r = rng.uniform();
    if (r < 0.05)
      v = 0.0;
    else if (r < 0.1)
      v = 1.0;
    p.at(i, 1) = v;
    p.at(i, 0) = 1.0 - v;
  }
  return p;
}

inline bool both_classes_present(const LabelGrid& g) {
  bool has0 = false, has1 = false;
  for (std::uint8_t v : g.labels) (v ? has1 : has0) = true;
  return has0 && has1;
}

inline std::vector<std::array<int, 3>> pixel_coords(const std::vector<int>& dims) {
  const int nd = static_cast<int>(dims.size());
  const Index n = element_count(dims);
  std::vector<std::array<int, 3>> c(static_cast<std::size_t>(n), {0, 0, 0});
  for (Index i = 0; i < n; ++i) {
    Index rest = i;
    for (int a = nd - 1; a >= 0; --a) {
      c[i][a] = static_cast<int>(rest % dims[a]);
      rest /= dims[a];
    }
  }
  return c;
}

// O(N^2) signed nearest-opposite-region distances for one class (negative
// inside). Deliberately independent of the separable EDT.
inline std::vector<double> brute_signed_field(const LabelGrid& g, int cls) {
  const int nd = g.ndim();
  const Index n = g.pixels();
  const auto coords = pixel_coords(g.dims);
  std::vector<double> d(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const bool inside = g.labels[i] == cls;
    double best = kInf;
    for (Index j = 0; j < n; ++j) {
      if ((g.labels[j] == cls) == inside) continue;
      double sq = 0.0;
      for (int a = 0; a < nd; ++a) {
        const double dd = g.spacing[a] * (coords[i][a] - coords[j][a]);
        sq += dd * dd;
      }
      best = std::min(best, sq);
    }
    d[i] = inside ? -std::sqrt(best) : std::sqrt(best);
  }
  return d;
}

inline void record(PropCheck& chk, double disc, Index n) {
  chk.max_abs_discrepancy = std::max(chk.max_abs_discrepancy, disc);
  const double bound = kPropTolPerPixel * double(n);
  chk.max_bound_ratio = std::max(chk.max_bound_ratio, disc / bound);
  if (disc > bound) chk.pass = false;
  ++chk.ran;
}

}  // namespace detail

// Prop 1: active-contour region loss (sum of wrong-class probabilities)
// equals the RW loss with the AC map Z = 1 - Y.
inline PropCheck verify_prop1(int instances, std::uint64_t seed) {
  PropCheck chk;
  chk.requested = instances;
  for (int t = 0; t < instances; ++t) {
    Rng rng(mix_seed(seed, 1000 + t));
    const auto dims = detail::random_prop_dims(rng, true);
    LabelGrid g =
        detail::random_binary_labels(rng, dims, detail::random_spacing(rng, dims.size()));
    ProbField p = detail::random_binary_probs(rng, g);
    double lhs = 0.0;  // fg pixels contribute bg probability and vice versa
    for (Index i = 0; i < g.pixels(); ++i)
      lhs += g.labels[i] == 1 ? p.at(i, 0) : p.at(i, 1);
    const double rhs =
        rw_loss(p, ac_map(one_hot(g)), Normalization::none).value;
    detail::record(chk, std::abs(lhs - rhs), g.pixels());
  }
  return chk;
}

// Prop 2: the level-set boundary loss, evaluated with brute-force signed
// distances, equals the RW loss with the signed-EDT boundary map.
inline PropCheck verify_prop2(int instances, std::uint64_t seed) {
  PropCheck chk;
  chk.requested = instances;
  for (int t = 0; t < instances; ++t) {
    Rng rng(mix_seed(seed, 2000 + t));
    const auto dims = detail::random_prop_dims(rng, true);
    LabelGrid g =
        detail::random_binary_labels(rng, dims, detail::random_spacing(rng, dims.size()));
    if (!detail::both_classes_present(g)) {
      ++chk.skipped;
      continue;
    }
    ProbField p = detail::random_binary_probs(rng, g);
    const auto d0 = detail::brute_signed_field(g, 0);
    const auto d1 = detail::brute_signed_field(g, 1);
    double lhs = 0.0;
    for (Index i = 0; i < g.pixels(); ++i)
      lhs += p.at(i, 0) * d0[i] + p.at(i, 1) * d1[i];
    const double rhs = rw_loss(p, boundary_map(g), Normalization::none).value;
    detail::record(chk, std::abs(lhs - rhs), g.pixels());
  }
  return chk;
}

// Prop 3: the one-sided distance-transform HD loss
// (1/N) sum_i (y_i - p_i)^2 d_i^alpha (ground-truth distances only) equals
// the squared-probability RW loss with the HD map.
inline PropCheck verify_prop3(int instances, std::uint64_t seed,
                              double alpha = 2.0) {
  PropCheck chk;
  chk.requested = instances;
  for (int t = 0; t < instances; ++t) {
    Rng rng(mix_seed(seed, 3000 + t));
    const auto dims = detail::random_prop_dims(rng, true);
    LabelGrid g =
        detail::random_binary_labels(rng, dims, detail::random_spacing(rng, dims.size()));
    if (!detail::both_classes_present(g)) {
      ++chk.skipped;
      continue;
    }
    ProbField p = detail::random_binary_probs(rng, g);
    const Index n = g.pixels();
    const auto dist = detail::brute_signed_field(g, 1);
    double lhs = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double y = g.labels[i] == 1 ? 1.0 : 0.0;
      const double r = y - p.at(i, 1);
      // Distance to the ground-truth foreground boundary: for fg pixels the
      // depth inside, for bg pixels the distance to the region.
      lhs += r * r * std::pow(std::abs(dist[i]), alpha);
    }
    lhs /= double(n);
    const double rhs = rw2_loss(p, hd_map(g, alpha)).value;
    detail::record(chk, std::abs(lhs - rhs), n);
  }
  return chk;
}

// Prop 4: the two-level constant boundary loss (alpha on the true class,
// -beta elsewhere, summed directly from region membership) equals the RW
// loss with the cao map.
inline PropCheck verify_prop4(int instances, std::uint64_t seed) {
  PropCheck chk;
  chk.requested = instances;
  for (int t = 0; t < instances; ++t) {
    Rng rng(mix_seed(seed, 4000 + t));
    const auto dims = detail::random_prop_dims(rng, true);
    LabelGrid g =
        detail::random_binary_labels(rng, dims, detail::random_spacing(rng, dims.size()));
    ProbField p = detail::random_binary_probs(rng, g);
    const double ca = rng.uniform(0.0, 5.0);
    const double cb = rng.coin() ? ca : rng.uniform(0.0, 5.0);
    double lhs = 0.0;
    for (Index i = 0; i < g.pixels(); ++i) {
      if (g.labels[i] == 1)
        lhs += -cb * p.at(i, 0) + ca * p.at(i, 1);
      else
        lhs += ca * p.at(i, 0) - cb * p.at(i, 1);
    }
    const double rhs =
        rw_loss(p, cao_map(one_hot(g), ca, cb), Normalization::none).value;
    detail::record(chk, std::abs(lhs - rhs), g.pixels());
  }
  return chk;
}

// Prop 5: the region-based loss RL = sum_{fg}(1 - p_i) + sum_{bg} p_i equals
// the RW loss with the AC map.
inline PropCheck verify_prop5(int instances, std::uint64_t seed) {
  PropCheck chk;
  chk.requested = instances;
  for (int t = 0; t < instances; ++t) {
    Rng rng(mix_seed(seed, 5000 + t));
    const auto dims = detail::random_prop_dims(rng, true);
    LabelGrid g =
        detail::random_binary_labels(rng, dims, detail::random_spacing(rng, dims.size()));
    ProbField p = detail::random_binary_probs(rng, g);
    double lhs = 0.0;
    for (Index i = 0; i < g.pixels(); ++i)
      lhs += g.labels[i] == 1 ? 1.0 - p.at(i, 1) : p.at(i, 1);
    const double rhs =
        rw_loss(p, ac_map(one_hot(g)), Normalization::none).value;
    detail::record(chk, std::abs(lhs - rhs), g.pixels());
  }
  return chk;
}

inline PropCheck verify_prop(int which, int instances, std::uint64_t seed) {
  switch (which) {
    case 1: return verify_prop1(instances, seed);
    case 2: return verify_prop2(instances, seed);
    case 3: return verify_prop3(instances, seed);
    case 4: return verify_prop4(instances, seed);
    case 5: return verify_prop5(instances, seed);
  }
  throw ConfigError("property index must be 1..5");
}

}  // namespace rw
