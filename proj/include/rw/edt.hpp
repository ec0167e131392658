#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "rw/core.hpp"

namespace rw {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Exact 1-D squared Euclidean distance transform under a sampled quadratic:
//   out[q] = min_p ( (spacing * (q - p))^2 + f[p] )
// computed as the lower envelope of the parabolas rooted at each p
// (Felzenszwalb-Huttenlocher). Entries with f[p] = +inf contribute nothing;
// a row of all +inf stays all +inf.
inline void squared_edt_1d(std::span<const double> f, double spacing,
                           std::span<double> out, std::vector<int>& v,
                           std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  const double s2 = spacing * spacing;
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    while (k >= 0) {
      const int p = v[k];
      // Abscissa where the parabola at q overtakes the one at p.
      const double s =
          ((f[q] + s2 * q * q) - (f[p] + s2 * p * p)) / (2.0 * s2 * (q - p));
      if (k >= 1 && s <= z[k])
        --k;
      else {
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
        break;
      }
    }
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
    }
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) out[q] = kInf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const int p = v[j];
    const double d = spacing * (q - p);
    out[q] = d * d + f[p];
  }
}

inline std::vector<double> squared_edt_1d(std::span<const double> f,
                                          double spacing) {
  std::vector<double> out(f.size());
  std::vector<int> v;
  std::vector<double> z;
  squared_edt_1d(f, spacing, out, v, z);
  return out;
}

namespace detail {

// Apply the 1-D transform along every line of `axis`, in place. `sq` holds
// one value per grid point, row-major with the last axis fastest.
inline void squared_edt_axis(std::vector<double>& sq,
                             const std::vector<int>& dims,
                             const std::vector<double>& spacing, int axis) {
  const int nd = static_cast<int>(dims.size());
  Index stride = 1;
  for (int a = axis + 1; a < nd; ++a) stride *= dims[a];
  const int n = dims[axis];
  Index lines = 1;
  for (int a = 0; a < nd; ++a)
    if (a != axis) lines *= dims[a];

  std::vector<double> fbuf(n), dbuf(n);
  std::vector<int> v;
  std::vector<double> z;
  const Index block = stride * n;  // span of one axis-aligned slab
  for (Index line = 0; line < lines; ++line) {
    const Index base = line / stride * block + line % stride;
    for (int i = 0; i < n; ++i) fbuf[i] = sq[base + i * stride];
    squared_edt_1d(fbuf, spacing[axis], dbuf, v, z);
    for (int i = 0; i < n; ++i) sq[base + i * stride] = dbuf[i];
  }
}

}  // namespace detail

// Exact n-D squared EDT of a seed indicator: in[i] = 0 at seeds, +inf
// elsewhere. Anisotropic spacing is honoured per axis. Decomposes into
// separable 1-D transforms, which preserves exactness.
inline std::vector<double> squared_edt(std::vector<double> seed,
                                       const std::vector<int>& dims,
                                       const std::vector<double>& spacing) {
  if (static_cast<Index>(seed.size()) != element_count(dims))
    throw ShapeError("squared_edt: seed size does not match dims");
  for (int a = 0; a < static_cast<int>(dims.size()); ++a)
    detail::squared_edt_axis(seed, dims, spacing, a);
  return seed;
}

// Per-channel outcome of a signed distance computation.
enum class ChannelStatus { ok, empty_class, full_class };

// K-channel signed Euclidean distance field: channel k holds the distance to
// the boundary of class k, negative inside the class region and positive
// outside. Degenerate channels (class absent, or covering the whole grid)
// are filled with +inf / -inf and flagged in status.
struct SignedDistanceField : Field {
  std::vector<ChannelStatus> status;

  SignedDistanceField() = default;
  SignedDistanceField(std::vector<int> d, int k, std::vector<double> s = {})
      : Field(std::move(d), k, std::move(s)),
        status(k, ChannelStatus::ok) {}

  bool all_ok() const {
    for (ChannelStatus s : status)
      if (s != ChannelStatus::ok) return false;
    return true;
  }
};

// Signed per-class EDT of a label grid. For each class k, distances are to
// the nearest pixel of the opposite region (so every pixel has distance
// >= min spacing; no pixel lies "on" the boundary).
inline SignedDistanceField class_edt(const LabelGrid& grid) {
  const Index n = grid.pixels();
  const int K = grid.num_classes;
  SignedDistanceField out(grid.dims, K, grid.spacing);

  std::vector<double> seed(static_cast<std::size_t>(n));
  for (int k = 0; k < K; ++k) {
    Index members = 0;
    for (Index i = 0; i < n; ++i)
      if (grid.labels[i] == k) ++members;
    if (members == 0) {
      out.status[k] = ChannelStatus::empty_class;
      for (Index i = 0; i < n; ++i) out.at(i, k) = kInf;
      continue;
    }
    if (members == n) {
      out.status[k] = ChannelStatus::full_class;
      for (Index i = 0; i < n; ++i) out.at(i, k) = -kInf;
      continue;
    }
    // Distance from outside pixels to the class region.
    for (Index i = 0; i < n; ++i) seed[i] = grid.labels[i] == k ? 0.0 : kInf;
    std::vector<double> sq_out = squared_edt(seed, grid.dims, grid.spacing);
    // Distance from inside pixels to the complement.
    for (Index i = 0; i < n; ++i) seed[i] = grid.labels[i] == k ? kInf : 0.0;
    std::vector<double> sq_in = squared_edt(seed, grid.dims, grid.spacing);
    for (Index i = 0; i < n; ++i)
      out.at(i, k) = grid.labels[i] == k ? -std::sqrt(sq_in[i])
                                         : std::sqrt(sq_out[i]);
  }
  return out;
}

}  // namespace rw
