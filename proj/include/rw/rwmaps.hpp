#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rw/core.hpp"
#include "rw/edt.hpp"

namespace rw {

// Map families. Every map is an N x K field built purely from ground truth;
// training multiplies it per-pixel against softmax probabilities.
enum class MapKind { ac, boundary, rrw, hd, cao };

inline const char* map_kind_name(MapKind k) {
  switch (k) {
    case MapKind::ac: return "ac";
    case MapKind::boundary: return "boundary";
    case MapKind::rrw: return "rrw";
    case MapKind::hd: return "hd";
    case MapKind::cao: return "cao";
  }
  return "?";
}

inline MapKind parse_map_kind(const std::string& s) {
  if (s == "ac") return MapKind::ac;
  if (s == "boundary") return MapKind::boundary;
  if (s == "rrw") return MapKind::rrw;
  if (s == "hd") return MapKind::hd;
  if (s == "cao") return MapKind::cao;
  throw ConfigError("unknown map kind '" + s + "'");
}

struct MapSpec {
  MapKind kind = MapKind::rrw;
  double hd_alpha = 2.0;   // exponent on the outside distance, > 0
  double cao_alpha = 0.0;  // own-class constant
  double cao_beta = 0.0;   // negated off-class constant
};

// z_ik = 1 - y_ik (active-contour region map).
inline RWMap ac_map(const OneHot& y) {
  RWMap z(y.dims, y.channels, y.spacing);
  for (std::size_t i = 0; i < y.values.size(); ++i)
    z.values[i] = 1.0 - y.values[i];
  return z;
}

// Signed per-class boundary distance in mm: negative inside the class
// region, positive outside. Undefined for degenerate classes.
inline RWMap boundary_map(const LabelGrid& grid) {
  SignedDistanceField sdf = class_edt(grid);
  for (int k = 0; k < grid.num_classes; ++k) {
    if (sdf.status[k] == ChannelStatus::empty_class)
      throw ConfigError("boundary map undefined: class " + std::to_string(k) +
                        " is empty");
    if (sdf.status[k] == ChannelStatus::full_class)
      throw ConfigError("boundary map undefined: class " + std::to_string(k) +
                        " covers the whole grid");
  }
  return RWMap(static_cast<Field&&>(std::move(sdf)));
}

// Rectified map: own-class values are boundary depths normalized to [-1, 0)
// (deepest pixel hits exactly -1), every other component is 1. An empty
// class degrades to an all-ones channel with a warning; a full class has no
// boundary to normalize against and is an error.
inline RWMap rrw_map(const LabelGrid& grid,
                     std::vector<std::string>* warnings = nullptr) {
  SignedDistanceField sdf = class_edt(grid);
  const Index n = grid.pixels();
  RWMap z(grid.dims, grid.num_classes, grid.spacing);
  for (int k = 0; k < grid.num_classes; ++k) {
    if (sdf.status[k] == ChannelStatus::full_class)
      throw ConfigError("rrw map undefined: class " + std::to_string(k) +
                        " covers the whole grid (no boundary)");
    if (sdf.status[k] == ChannelStatus::empty_class) {
      for (Index i = 0; i < n; ++i) z.at(i, k) = 1.0;
      if (warnings)
        warnings->push_back("class " + std::to_string(k) +
                            " is empty; rrw channel set to all ones");
      continue;
    }
    double max_depth = 0.0;
    for (Index i = 0; i < n; ++i)
      if (grid.labels[i] == k) max_depth = std::max(max_depth, -sdf.at(i, k));
    for (Index i = 0; i < n; ++i)
      z.at(i, k) = grid.labels[i] == k ? sdf.at(i, k) / max_depth : 1.0;
  }
  return z;
}

// z_ik = 0 inside the class region, (distance in mm)^alpha outside.
inline RWMap hd_map(const LabelGrid& grid, double alpha = 2.0) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw DomainError("hd map exponent must be positive and finite");
  SignedDistanceField sdf = class_edt(grid);
  for (int k = 0; k < grid.num_classes; ++k)
    if (sdf.status[k] == ChannelStatus::empty_class)
      throw ConfigError("hd map undefined: class " + std::to_string(k) +
                        " is empty");
  const Index n = grid.pixels();
  RWMap z(grid.dims, grid.num_classes, grid.spacing);
  for (int k = 0; k < grid.num_classes; ++k)
    for (Index i = 0; i < n; ++i) {
      const double d = sdf.at(i, k);
      z.at(i, k) = d <= 0.0 ? 0.0 : std::pow(d, alpha);
    }
  return z;
}

// Constant two-level map: alpha on the pixel's own class, -beta elsewhere.
inline RWMap cao_map(const OneHot& y, double alpha, double beta) {
  if (!std::isfinite(alpha) || !std::isfinite(beta))
    throw DomainError("cao map constants must be finite");
  RWMap z(y.dims, y.channels, y.spacing);
  const Index n = y.pixels();
  for (Index i = 0; i < n; ++i)
    for (int k = 0; k < y.channels; ++k)
      z.at(i, k) = y.at(i, k) == 1.0 ? alpha : -beta;
  return z;
}

inline RWMap make_map(const MapSpec& spec, const LabelGrid& grid,
                      std::vector<std::string>* warnings = nullptr) {
  switch (spec.kind) {
    case MapKind::ac: return ac_map(one_hot(grid));
    case MapKind::boundary: return boundary_map(grid);
    case MapKind::rrw: return rrw_map(grid, warnings);
    case MapKind::hd: return hd_map(grid, spec.hd_alpha);
    case MapKind::cao: return cao_map(one_hot(grid), spec.cao_alpha, spec.cao_beta);
  }
  throw ConfigError("unknown map kind");
}

enum class RectifyMode { constant, mean, max };

// Enforce the rectification principle on an arbitrary map: keep each pixel's
// own-class value, replace the other K-1 components with one common value
// (a given constant, or the mean / max of the values being replaced).
inline RWMap rectify(const RWMap& z, const OneHot& y, RectifyMode mode,
                     double c = 0.0) {
  require_same_grid(z, y, "rectify");
  const int K = z.channels;
  if (K < 2) throw DomainError("rectify needs at least 2 classes");
  RWMap out = z;
  const Index n = z.pixels();
  for (Index i = 0; i < n; ++i) {
    auto yi = y.pixel(i);
    int own = 0;
    for (int k = 1; k < K; ++k)
      if (yi[k] > yi[own]) own = k;
    double v;
    if (mode == RectifyMode::constant) {
      v = c;
    } else {
      auto zi = z.pixel(i);
      if (mode == RectifyMode::mean) {
        double s = 0.0;
        for (int k = 0; k < K; ++k)
          if (k != own) s += zi[k];
        v = s / (K - 1);
      } else {
        v = -kInf;
        for (int k = 0; k < K; ++k)
          if (k != own) v = std::max(v, zi[k]);
      }
    }
    for (int k = 0; k < K; ++k)
      if (k != own) out.at(i, k) = v;
  }
  return out;
}

struct RectificationReport {
  bool rectified = true;
  Index checked = 0;           // pixels examined
  Index violations = 0;        // pixels failing either condition
  Index first_violation = -1;  // flat pixel index, -1 if none
  double max_offclass_spread = 0.0;  // worst |z_il - z_im| among off-class pairs
  double max_ownclass_excess = 0.0;  // worst z_own - min_other when positive

  explicit operator bool() const { return rectified; }
};

// A map is rectified when, at every pixel, all non-true-class components are
// equal (within tol) and the own-class component is <= each of them. Under
// that layout the per-pixel gradient pushes the true class up and every
// other class down, for any probability vector.
inline RectificationReport is_rectified(const RWMap& z, const OneHot& y,
                                        double tol = 1e-12) {
  require_same_grid(z, y, "is_rectified");
  const int K = z.channels;
  RectificationReport rep;
  const Index n = z.pixels();
  rep.checked = n;
  for (Index i = 0; i < n; ++i) {
    auto yi = y.pixel(i);
    auto zi = z.pixel(i);
    int own = 0;
    for (int k = 1; k < K; ++k)
      if (yi[k] > yi[own]) own = k;
    double lo = kInf, hi = -kInf;
    for (int k = 0; k < K; ++k)
      if (k != own) {
        lo = std::min(lo, zi[k]);
        hi = std::max(hi, zi[k]);
      }
    const double spread = K > 1 ? hi - lo : 0.0;
    const double excess = K > 1 ? zi[own] - lo : 0.0;
    bool bad = false;
    if (spread > tol) {
      bad = true;
      rep.max_offclass_spread = std::max(rep.max_offclass_spread, spread);
    }
    if (excess > tol) {
      bad = true;
      rep.max_ownclass_excess = std::max(rep.max_ownclass_excess, excess);
    }
    if (bad) {
      ++rep.violations;
      if (rep.first_violation < 0) rep.first_violation = i;
    }
  }
  rep.rectified = rep.violations == 0;
  return rep;
}

}  // namespace rw
