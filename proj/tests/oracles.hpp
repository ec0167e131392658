#pragma once

// Independent brute-force reference implementations used to verify the
// library. Everything here is written directly from the mathematical
// definitions (quadratic scans, explicit enumeration) and shares no
// algorithmic structure with the code under test.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "rw/core.hpp"

namespace oracle {

struct Coord {
  int z, y, x;
};

inline std::vector<Coord> coords_of(const std::vector<int>& dims) {
  const int nd = static_cast<int>(dims.size());
  const int D = nd == 3 ? static_cast<int>(dims[0]) : 1;
  const int H = static_cast<int>(dims[nd == 3 ? 1 : 0]);
  const int W = static_cast<int>(dims[nd == 3 ? 2 : 1]);
  std::vector<Coord> out;
  out.reserve(static_cast<std::size_t>(D) * H * W);
  for (int z = 0; z < D; ++z)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) out.push_back({z, y, x});
  return out;
}

inline std::array<double, 3> spacing3(const std::vector<int>& dims,
                                      const std::vector<double>& sp) {
  if (dims.size() == 3) return {sp[0], sp[1], sp[2]};
  return {1.0, sp[0], sp[1]};
}

// Squared distance between two voxels, accumulated axis by axis in z,y,x
// order (the same commutative sum any direct implementation produces).
inline double sqdist(const Coord& a, const Coord& b,
                     const std::array<double, 3>& sp) {
  const double dz = sp[0] * (a.z - b.z);
  const double dy = sp[1] * (a.y - b.y);
  const double dx = sp[2] * (a.x - b.x);
  return dz * dz + dy * dy + dx * dx;
}

// O(N^2) squared Euclidean distance transform to the seed set.
inline std::vector<double> brute_sq_edt(const std::vector<std::uint8_t>& seed,
                                        const std::vector<int>& dims,
                                        const std::vector<double>& spacing) {
  const auto cs = coords_of(dims);
  const auto sp = spacing3(dims, spacing);
  std::vector<double> out(cs.size(),
                          std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < cs.size(); ++i)
    for (std::size_t j = 0; j < cs.size(); ++j)
      if (seed[j]) out[i] = std::min(out[i], sqdist(cs[i], cs[j], sp));
  return out;
}

// Plain Dice from voxel counts.
inline double brute_dice(const std::vector<std::uint8_t>& a,
                         const std::vector<std::uint8_t>& b) {
  long long ca = 0, cb = 0, inter = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca += a[i] != 0;
    cb += b[i] != 0;
    inter += (a[i] != 0) && (b[i] != 0);
  }
  if (ca + cb == 0) return 1.0;
  return 2.0 * double(inter) / double(ca + cb);
}

// Boundary voxels: set voxels with a face neighbor outside the set or on the
// grid border.
inline std::vector<std::size_t> brute_boundary(
    const std::vector<std::uint8_t>& mask, const std::vector<int>& dims) {
  const int nd = static_cast<int>(dims.size());
  const int D = nd == 3 ? static_cast<int>(dims[0]) : 1;
  const int H = static_cast<int>(dims[nd == 3 ? 1 : 0]);
  const int W = static_cast<int>(dims[nd == 3 ? 2 : 1]);
  auto at = [&](int z, int y, int x) {
    return mask[(static_cast<std::size_t>(z) * H + y) * W + x] != 0;
  };
  std::vector<std::size_t> out;
  for (int z = 0; z < D; ++z)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        if (!at(z, y, x)) continue;
        bool border = y == 0 || y == H - 1 || x == 0 || x == W - 1 ||
                      (nd == 3 && (z == 0 || z == D - 1));
        bool exposed = border;
        if (!exposed && y > 0 && !at(z, y - 1, x)) exposed = true;
        if (!exposed && y < H - 1 && !at(z, y + 1, x)) exposed = true;
        if (!exposed && x > 0 && !at(z, y, x - 1)) exposed = true;
        if (!exposed && x < W - 1 && !at(z, y, x + 1)) exposed = true;
        if (!exposed && nd == 3 && z > 0 && !at(z - 1, y, x)) exposed = true;
        if (!exposed && nd == 3 && z < D - 1 && !at(z + 1, y, x))
          exposed = true;
        if (exposed)
          out.push_back((static_cast<std::size_t>(z) * H + y) * W + x);
      }
  return out;
}

// Symmetric boundary Hausdorff distance by explicit pairwise minimization.
inline double brute_hausdorff(const std::vector<std::uint8_t>& a,
                              const std::vector<std::uint8_t>& b,
                              const std::vector<int>& dims,
                              const std::vector<double>& spacing) {
  const auto cs = coords_of(dims);
  const auto sp = spacing3(dims, spacing);
  const auto ba = brute_boundary(a, dims);
  const auto bb = brute_boundary(b, dims);
  auto directed = [&](const std::vector<std::size_t>& from,
                      const std::vector<std::size_t>& to) {
    double worst = 0.0;
    for (std::size_t i : from) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j : to) best = std::min(best, sqdist(cs[i], cs[j], sp));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::sqrt(std::max(directed(ba, bb), directed(bb, ba)));
}

// Exhaustive paired sign-flip permutation test with add-one smoothing.
inline double brute_perm_p(const std::vector<double>& a,
                           const std::vector<double>& b, bool mean_abs) {
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  auto stat = [&](std::uint64_t signs) {
    double s = 0.0, sa = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = (signs >> i) & 1 ? -d[i] : d[i];
      s += v;
      sa += std::abs(v);
    }
    return mean_abs ? sa / double(n) : std::abs(s / double(n));
  };
  const double observed = stat(0);
  std::uint64_t hits = 0;
  const std::uint64_t total = 1ull << n;
  for (std::uint64_t m = 0; m < total; ++m)
    if (stat(m) >= observed) ++hits;
  return double(1 + hits) / double(1 + total);
}

}  // namespace oracle
