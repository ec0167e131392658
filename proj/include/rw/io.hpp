#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rw/core.hpp"

namespace rw {

// On-disk element type of a grid file.
enum class ElemType : std::uint8_t { u8 = 0, f32 = 1, f64 = 2 };

// Grid file layout (all integers little-endian):
//   magic   6 bytes  "RWGRID"
//   version u8       currently 1
//   elem    u8       0 = u8 labels, 1 = f32, 2 = f64
//   ndim    u32      2 or 3
//   channels u32     0 for label grids, K >= 1 for fields
//   dims    ndim x u32
//   spacing ndim x f32   millimetres per voxel
//   payload row-major, channel index fastest
//
// Label grids do not store a class count; readers infer K = max label + 1.

namespace detail {

constexpr char kMagic[6] = {'R', 'W', 'G', 'R', 'I', 'D'};
constexpr std::uint8_t kVersion = 1;

struct ByteReader {
  const unsigned char* p;
  std::size_t left;

  void need(std::size_t n, const char* what) {
    if (left < n)
      throw CorruptionError(std::string("grid file truncated while reading ") +
                            what);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    std::uint8_t v = *p;
    ++p;
    --left;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
                      std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
    p += 4;
    left -= 4;
    return v;
  }
  float f32(const char* what) {
    std::uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64(const char* what) {
    need(8, what);
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = bits << 8 | p[i];
    p += 8;
    left -= 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

inline void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char(v >> 8 & 0xff));
  out.push_back(char(v >> 16 & 0xff));
  out.push_back(char(v >> 24 & 0xff));
}

inline void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

inline void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u32(out, std::uint32_t(bits & 0xffffffffull));
  put_u32(out, std::uint32_t(bits >> 32));
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof()) throw Error("read failure on " + path);
  return std::move(buf).str();
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out.good()) throw Error("write failure on " + path);
}

inline std::string header_bytes(ElemType elem, const std::vector<int>& dims,
                                std::uint32_t channels,
                                const std::vector<double>& spacing) {
  std::string out(kMagic, sizeof kMagic);
  out.push_back(char(kVersion));
  out.push_back(char(static_cast<std::uint8_t>(elem)));
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  put_u32(out, channels);
  for (int d : dims) put_u32(out, static_cast<std::uint32_t>(d));
  for (double s : spacing) put_f32(out, static_cast<float>(s));
  return out;
}

}  // namespace detail

// Result of reading a grid file: exactly one of the two members is active,
// selected by elem.
struct GridFile {
  ElemType elem = ElemType::u8;
  LabelGrid labels;
  Field field;

  bool is_labels() const { return elem == ElemType::u8; }
};

inline bool looks_binary(const std::string& bytes) {
  return bytes.size() >= sizeof detail::kMagic &&
         std::memcmp(bytes.data(), detail::kMagic, sizeof detail::kMagic) == 0;
}

// Text label format (2-D only): first line "H W K", then H rows of W labels.
inline LabelGrid parse_labels_text(std::istream& in) {
  long long h = 0, w = 0, k = 0;
  if (!(in >> h >> w >> k))
    throw FormatError("text label header must be three integers: H W K");
  if (h < 1 || w < 1 || k < 1 || k > 256)
    throw FormatError("text label header out of range");
  std::vector<std::uint8_t> lab;
  lab.reserve(static_cast<std::size_t>(h * w));
  for (long long i = 0; i < h * w; ++i) {
    long long v;
    if (!(in >> v))
      throw CorruptionError("text label body ended after " +
                            std::to_string(i) + " of " + std::to_string(h * w) +
                            " entries");
    if (v < 0 || v >= k)
      throw CorruptionError("label " + std::to_string(v) +
                            " exceeds declared class count " + std::to_string(k));
    lab.push_back(static_cast<std::uint8_t>(v));
  }
  return LabelGrid({int(h), int(w)}, int(k), std::move(lab));
}

inline void write_labels_text(std::ostream& out, const LabelGrid& g) {
  if (g.ndim() != 2) throw ShapeError("text label format is 2-D only");
  out << g.dims[0] << ' ' << g.dims[1] << ' ' << g.num_classes << '\n';
  for (int y = 0; y < g.dims[0]; ++y) {
    for (int x = 0; x < g.dims[1]; ++x) {
      if (x) out << ' ';
      out << int(g.labels[static_cast<std::size_t>(y) * g.dims[1] + x]);
    }
    out << '\n';
  }
}

inline GridFile decode_grid(const std::string& bytes, const std::string& origin) {
  if (!looks_binary(bytes)) {
    // Fall back to the text label format.
    std::istringstream in(bytes);
    GridFile gf;
    gf.elem = ElemType::u8;
    gf.labels = parse_labels_text(in);
    return gf;
  }
  detail::ByteReader r{reinterpret_cast<const unsigned char*>(bytes.data()),
                       bytes.size()};
  r.p += sizeof detail::kMagic;
  r.left -= sizeof detail::kMagic;
  const std::uint8_t version = r.u8("version");
  if (version != detail::kVersion)
    throw FormatError(origin + ": unsupported grid file version " +
                      std::to_string(int(version)));
  const std::uint8_t elem_code = r.u8("element type");
  if (elem_code > 2)
    throw FormatError(origin + ": unknown element code " +
                      std::to_string(int(elem_code)));
  const ElemType elem = static_cast<ElemType>(elem_code);
  const std::uint32_t ndim = r.u32("ndim");
  if (ndim != 2 && ndim != 3)
    throw FormatError(origin + ": ndim must be 2 or 3, got " +
                      std::to_string(ndim));
  const std::uint32_t channels = r.u32("channels");
  if (elem == ElemType::u8 && channels != 0)
    throw FormatError(origin + ": label grids must have channels = 0");
  if (elem != ElemType::u8 && channels == 0)
    throw FormatError(origin + ": field grids must have channels >= 1");
  std::vector<int> dims(ndim);
  Index count = 1;
  for (auto& d : dims) {
    std::uint32_t v = r.u32("dims");
    if (v == 0 || v > (1u << 24))
      throw CorruptionError(origin + ": grid extent out of range");
    d = static_cast<int>(v);
    count *= d;
  }
  std::vector<double> spacing(ndim);
  for (auto& s : spacing) {
    s = r.f32("spacing");
    if (!(s > 0.0) || !std::isfinite(s))
      throw CorruptionError(origin + ": spacing must be positive and finite");
  }

  GridFile gf;
  gf.elem = elem;
  if (elem == ElemType::u8) {
    if (static_cast<Index>(r.left) != count)
      throw CorruptionError(origin + ": label payload has " +
                            std::to_string(r.left) + " bytes, expected " +
                            std::to_string(count));
    std::vector<std::uint8_t> lab(r.p, r.p + count);
    int max_label = 0;
    for (std::uint8_t v : lab) max_label = std::max(max_label, int(v));
    gf.labels = LabelGrid(dims, max_label + 1, std::move(lab), spacing);
    return gf;
  }
  const Index vals = count * static_cast<Index>(channels);
  const std::size_t elem_size = elem == ElemType::f32 ? 4 : 8;
  if (r.left != static_cast<std::size_t>(vals) * elem_size)
    throw CorruptionError(origin + ": field payload has " +
                          std::to_string(r.left) + " bytes, expected " +
                          std::to_string(vals * Index(elem_size)));
  Field f(dims, static_cast<int>(channels), spacing);
  if (elem == ElemType::f32)
    for (Index i = 0; i < vals; ++i) f.values[i] = r.f32("payload");
  else
    for (Index i = 0; i < vals; ++i) f.values[i] = r.f64("payload");
  gf.field = std::move(f);
  return gf;
}

inline GridFile read_grid(const std::string& path) {
  return decode_grid(detail::read_file_bytes(path), path);
}

inline LabelGrid read_labels(const std::string& path) {
  GridFile gf = read_grid(path);
  if (!gf.is_labels())
    throw FormatError(path + ": expected a label grid, found a " +
                      std::string(gf.elem == ElemType::f32 ? "f32" : "f64") +
                      " field");
  return std::move(gf.labels);
}

inline Field read_field(const std::string& path) {
  GridFile gf = read_grid(path);
  if (gf.is_labels())
    throw FormatError(path + ": expected a field, found a label grid");
  return std::move(gf.field);
}

inline std::string encode_labels(const LabelGrid& g) {
  std::string out =
      detail::header_bytes(ElemType::u8, g.dims, 0, g.spacing);
  out.append(reinterpret_cast<const char*>(g.labels.data()), g.labels.size());
  return out;
}

inline std::string encode_field(const Field& f, ElemType elem = ElemType::f32) {
  if (elem == ElemType::u8)
    throw FormatError("fields cannot be written with u8 elements");
  std::string out = detail::header_bytes(
      elem, f.dims, static_cast<std::uint32_t>(f.channels), f.spacing);
  if (elem == ElemType::f32)
    for (double v : f.values) detail::put_f32(out, static_cast<float>(v));
  else
    for (double v : f.values) detail::put_f64(out, v);
  return out;
}

inline void write_grid(const std::string& path, const LabelGrid& g) {
  detail::write_file_bytes(path, encode_labels(g));
}

inline void write_field(const std::string& path, const Field& f,
                        ElemType elem = ElemType::f32) {
  detail::write_file_bytes(path, encode_field(f, elem));
}

}  // namespace rw
