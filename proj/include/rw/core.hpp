#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rw {

using Index = std::int64_t;

// Error taxonomy. Everything thrown by this library derives from Error, so
// callers can catch one type at the boundary and still discriminate below it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unrecognized magic, version, or element code while decoding a stream.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Structurally valid header whose body is truncated or inconsistent.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

// A numeric value outside its documented domain (probabilities off the
// simplex, non-finite logits, negative spacing, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Operands whose shapes cannot be combined.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// An unsatisfiable run configuration (unknown key, empty class, bad geometry).
class ConfigError : public Error {
 public:
  using Error::Error;
};

inline Index element_count(const std::vector<int>& dims) {
  Index n = 1;
  for (int d : dims) n *= d;
  return n;
}

namespace detail {

inline void check_dims(const std::vector<int>& dims) {
  if (dims.size() != 2 && dims.size() != 3)
    throw ShapeError("grid must be 2-D or 3-D, got " +
                     std::to_string(dims.size()) + " dims");
  for (int d : dims)
    if (d <= 0) throw ShapeError("grid extent must be positive");
}

inline std::vector<double> check_spacing(std::vector<double> spacing,
                                         std::size_t ndim) {
  if (spacing.empty()) spacing.assign(ndim, 1.0);
  if (spacing.size() != ndim)
    throw ShapeError("spacing has " + std::to_string(spacing.size()) +
                     " entries for a " + std::to_string(ndim) + "-D grid");
  for (double s : spacing)
    if (!(s > 0.0) || !std::isfinite(s))
      throw DomainError("spacing entries must be positive and finite");
  return spacing;
}

}  // namespace detail

// Dense per-pixel class labels on a regular 2-D/3-D grid with physical
// spacing in millimetres per axis. Labels are class ids in [0, num_classes).
// Storage is flat row-major: the last axis varies fastest.
struct LabelGrid {
  std::vector<int> dims;
  std::vector<double> spacing;
  int num_classes = 0;
  std::vector<std::uint8_t> labels;

  LabelGrid() = default;

  LabelGrid(std::vector<int> dims_, int num_classes_,
            std::vector<std::uint8_t> labels_, std::vector<double> spacing_ = {})
      : dims(std::move(dims_)),
        spacing(detail::check_spacing(std::move(spacing_), dims.size())),
        num_classes(num_classes_),
        labels(std::move(labels_)) {
    detail::check_dims(dims);
    if (num_classes < 1 || num_classes > 256)
      throw DomainError("num_classes must be in [1, 256]");
    if (static_cast<Index>(labels.size()) != element_count(dims))
      throw ShapeError("label payload size does not match grid dims");
    for (std::uint8_t v : labels)
      if (v >= num_classes)
        throw DomainError("label " + std::to_string(int(v)) +
                          " out of range for " + std::to_string(num_classes) +
                          " classes");
  }

  int ndim() const { return static_cast<int>(dims.size()); }
  Index pixels() const { return element_count(dims); }
};

// A real-valued field with `channels` values per grid point. Storage is flat
// row-major over the grid with the channel index varying fastest, i.e. the
// K values of one pixel are contiguous.
struct Field {
  std::vector<int> dims;
  std::vector<double> spacing;
  int channels = 0;
  std::vector<double> values;

  Field() = default;

  Field(std::vector<int> dims_, int channels_, std::vector<double> spacing_ = {})
      : dims(std::move(dims_)),
        spacing(detail::check_spacing(std::move(spacing_), dims.size())),
        channels(channels_) {
    detail::check_dims(dims);
    if (channels < 1) throw ShapeError("field needs at least one channel");
    values.assign(static_cast<std::size_t>(element_count(dims)) * channels, 0.0);
  }

  int ndim() const { return static_cast<int>(dims.size()); }
  Index pixels() const { return element_count(dims); }

  double& at(Index pixel, int channel) {
    return values[static_cast<std::size_t>(pixel) * channels + channel];
  }
  double at(Index pixel, int channel) const {
    return values[static_cast<std::size_t>(pixel) * channels + channel];
  }
  std::span<double> pixel(Index i) {
    return {values.data() + static_cast<std::size_t>(i) * channels,
            static_cast<std::size_t>(channels)};
  }
  std::span<const double> pixel(Index i) const {
    return {values.data() + static_cast<std::size_t>(i) * channels,
            static_cast<std::size_t>(channels)};
  }
};

// Strong aliases so signatures say which kind of field they expect. They add
// no state; converting between kinds is an explicit, visible step.
struct OneHot : Field {
  OneHot() = default;
  explicit OneHot(Field f) : Field(std::move(f)) {}
  OneHot(std::vector<int> d, int k, std::vector<double> s = {})
      : Field(std::move(d), k, std::move(s)) {}
};

struct ProbField : Field {
  ProbField() = default;
  explicit ProbField(Field f) : Field(std::move(f)) {}
  ProbField(std::vector<int> d, int k, std::vector<double> s = {})
      : Field(std::move(d), k, std::move(s)) {}
};

struct LogitField : Field {
  LogitField() = default;
  explicit LogitField(Field f) : Field(std::move(f)) {}
  LogitField(std::vector<int> d, int k, std::vector<double> s = {})
      : Field(std::move(d), k, std::move(s)) {}
};

struct RWMap : Field {
  RWMap() = default;
  explicit RWMap(Field f) : Field(std::move(f)) {}
  RWMap(std::vector<int> d, int k, std::vector<double> s = {})
      : Field(std::move(d), k, std::move(s)) {}
};

inline void require_same_grid(const Field& a, const Field& b, const char* what) {
  if (a.dims != b.dims || a.channels != b.channels)
    throw ShapeError(std::string(what) + ": operand shapes differ");
}

inline void require_same_grid(const Field& a, const LabelGrid& g, const char* what) {
  if (a.dims != g.dims)
    throw ShapeError(std::string(what) + ": field and grid dims differ");
}

inline OneHot one_hot(const LabelGrid& g) {
  OneHot y(g.dims, g.num_classes, g.spacing);
  const Index n = g.pixels();
  for (Index i = 0; i < n; ++i) y.at(i, g.labels[i]) = 1.0;
  return y;
}

// Recover labels from a one-hot field (argmax; exact for true one-hot input).
inline LabelGrid to_labels(const OneHot& y) {
  std::vector<std::uint8_t> lab(static_cast<std::size_t>(y.pixels()));
  for (Index i = 0; i < y.pixels(); ++i) {
    auto p = y.pixel(i);
    int best = 0;
    for (int k = 1; k < y.channels; ++k)
      if (p[k] > p[best]) best = k;
    lab[i] = static_cast<std::uint8_t>(best);
  }
  return LabelGrid(y.dims, y.channels, std::move(lab), y.spacing);
}

inline void validate(const OneHot& y) {
  for (Index i = 0; i < y.pixels(); ++i) {
    auto p = y.pixel(i);
    int ones = 0;
    for (double v : p) {
      if (v == 1.0)
        ++ones;
      else if (v != 0.0)
        throw DomainError("one-hot field has entry not in {0,1}");
    }
    if (ones != 1) throw DomainError("one-hot row does not have exactly one 1");
  }
}

inline void validate(const ProbField& p, double tol = 1e-9) {
  for (Index i = 0; i < p.pixels(); ++i) {
    double s = 0.0;
    for (double v : p.pixel(i)) {
      if (!(v >= 0.0 && v <= 1.0))
        throw DomainError("probability entry outside [0,1]");
      s += v;
    }
    if (std::abs(s - 1.0) > tol)
      throw DomainError("probability row sums to " + std::to_string(s));
  }
}

inline void validate(const LogitField& f) {
  for (double v : f.values)
    if (!std::isfinite(v)) throw DomainError("logit field has non-finite entry");
}

inline void validate(const RWMap& z) {
  for (double v : z.values)
    if (!std::isfinite(v)) throw DomainError("RW map has non-finite entry");
}

}  // namespace rw
