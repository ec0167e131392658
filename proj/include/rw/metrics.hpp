#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rw/core.hpp"
#include "rw/edt.hpp"
#include "rw/rng.hpp"

namespace rw {

// Binary segmentation mask on a spaced grid.
struct BinaryMask {
  std::vector<int> dims;
  std::vector<double> spacing;
  std::vector<std::uint8_t> values;  // 0 or 1 per voxel

  BinaryMask() = default;
  BinaryMask(std::vector<int> dims_, std::vector<std::uint8_t> values_,
             std::vector<double> spacing_ = {})
      : dims(std::move(dims_)),
        spacing(detail::check_spacing(std::move(spacing_), dims.size())),
        values(std::move(values_)) {
    detail::check_dims(dims);
    if (static_cast<Index>(values.size()) != element_count(dims))
      throw ShapeError("mask payload size does not match dims");
    for (std::uint8_t v : values)
      if (v > 1) throw DomainError("mask values must be 0 or 1");
  }

  int ndim() const { return static_cast<int>(dims.size()); }
  Index voxels() const { return element_count(dims); }
  Index count() const {
    Index c = 0;
    for (std::uint8_t v : values) c += v;
    return c;
  }
};

// Mask of one class of a label grid.
inline BinaryMask class_mask(const LabelGrid& g, int cls) {
  if (cls < 0 || cls >= g.num_classes)
    throw DomainError("class index out of range");
  std::vector<std::uint8_t> v(g.labels.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = g.labels[i] == cls;
  return BinaryMask(g.dims, std::move(v), g.spacing);
}

// Dice overlap 2|A n B| / (|A| + |B|). Two empty masks agree perfectly (1);
// one empty mask overlaps nothing (0).
inline double dice(const BinaryMask& a, const BinaryMask& b) {
  if (a.dims != b.dims) throw ShapeError("dice: mask dims differ");
  Index ca = 0, cb = 0, inter = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    ca += a.values[i];
    cb += b.values[i];
    inter += a.values[i] & b.values[i];
  }
  if (ca + cb == 0) return 1.0;
  return 2.0 * double(inter) / double(ca + cb);
}

// Flat indices of mask voxels with at least one face-adjacent non-mask
// neighbor, or lying on the grid border.
inline std::vector<Index> boundary_voxels(const BinaryMask& m) {
  const int nd = m.ndim();
  std::vector<Index> strides(nd);
  Index s = 1;
  for (int a = nd - 1; a >= 0; --a) {
    strides[a] = s;
    s *= m.dims[a];
  }
  std::vector<Index> out;
  const Index n = m.voxels();
  std::vector<int> coord(nd, 0);
  for (Index i = 0; i < n; ++i) {
    if (m.values[i]) {
      bool boundary = false;
      for (int a = 0; a < nd && !boundary; ++a) {
        if (coord[a] == 0 || coord[a] == m.dims[a] - 1)
          boundary = true;
        else if (!m.values[i - strides[a]] || !m.values[i + strides[a]])
          boundary = true;
      }
      if (boundary) out.push_back(i);
    }
    for (int a = nd - 1; a >= 0; --a) {
      if (++coord[a] < m.dims[a]) break;
      coord[a] = 0;
    }
  }
  return out;
}

// Symmetric Hausdorff distance in mm between the boundary voxel sets,
// computed through the exact EDT seeded at each boundary.
inline double hausdorff(const BinaryMask& a, const BinaryMask& b) {
  if (a.dims != b.dims) throw ShapeError("hausdorff: mask dims differ");
  if (a.spacing != b.spacing)
    throw ShapeError("hausdorff: mask spacings differ");
  if (a.count() == 0 || b.count() == 0)
    throw DomainError("hausdorff undefined: empty mask");
  const auto ba = boundary_voxels(a);
  const auto bb = boundary_voxels(b);
  const Index n = a.voxels();

  auto directed = [&](const std::vector<Index>& from,
                      const std::vector<Index>& to) {
    std::vector<double> seed(static_cast<std::size_t>(n), kInf);
    for (Index i : to) seed[i] = 0.0;
    const std::vector<double> sq = squared_edt(std::move(seed), a.dims, a.spacing);
    double worst = 0.0;
    for (Index i : from) worst = std::max(worst, sq[i]);
    return worst;
  };

  return std::sqrt(std::max(directed(ba, bb), directed(bb, ba)));
}

enum class PermutationStat { abs_mean_diff, mean_abs_diff };

// Paired two-sample permutation test via random sign flips of the paired
// differences. The statistic defaults to |mean(a - b)|; the sign-flip
// invariant mean(|a - b|) reading is available behind the flag. When the full
// 2^n flip space is no larger than n_perm it is enumerated exhaustively;
// otherwise n_perm random flips are drawn. Either way the add-one corrected
// estimate p = (1 + #{T_perm >= T_obs}) / (1 + #perms) is returned.
inline double permutation_test(std::span<const double> a,
                               std::span<const double> b, int n_perm = 10000,
                               std::uint64_t seed = 0,
                               PermutationStat stat = PermutationStat::abs_mean_diff) {
  if (a.size() != b.size())
    throw ShapeError("permutation_test: sample lengths differ");
  const int n = static_cast<int>(a.size());
  if (n < 2) throw DomainError("permutation_test needs at least 2 pairs");
  if (n_perm < 1) throw DomainError("permutation_test needs n_perm >= 1");
  std::vector<double> d(n);
  for (int i = 0; i < n; ++i) d[i] = a[i] - b[i];

  auto statistic = [&](auto signed_value) {
    double s = 0.0;
    if (stat == PermutationStat::abs_mean_diff) {
      for (int i = 0; i < n; ++i) s += signed_value(i);
      return std::abs(s / n);
    }
    for (int i = 0; i < n; ++i) s += std::abs(signed_value(i));
    return s / n;
  };

  const double t_obs = statistic([&](int i) { return d[i]; });

  const bool exhaustive = n <= 62 && (1ull << n) <= std::uint64_t(n_perm);
  Index hits = 0;
  Index total = 0;
  if (exhaustive) {
    const std::uint64_t m = 1ull << n;
    for (std::uint64_t bits = 0; bits < m; ++bits) {
      const double t =
          statistic([&](int i) { return bits >> i & 1 ? -d[i] : d[i]; });
      if (t >= t_obs) ++hits;
    }
    total = static_cast<Index>(m);
  } else {
    Rng rng(seed);
    for (int r = 0; r < n_perm; ++r) {
      const std::uint64_t bits = rng.bits();
      double t;
      if (n <= 64) {
        t = statistic([&](int i) { return bits >> i & 1 ? -d[i] : d[i]; });
      } else {
        std::vector<char> flip(n);
        for (int i = 0; i < n; ++i) flip[i] = rng.coin();
        t = statistic([&](int i) { return flip[i] ? -d[i] : d[i]; });
      }
      if (t >= t_obs) ++hits;
    }
    total = n_perm;
  }
  return double(1 + hits) / double(1 + total);
}

// Right-continuous empirical CDF: fraction of values <= d.
inline double cdf(std::span<const double> values, double d) {
  if (values.empty()) throw DomainError("cdf of an empty sample");
  Index c = 0;
  for (double v : values)
    if (v <= d) ++c;
  return double(c) / double(values.size());
}

}  // namespace rw
