#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "rw.hpp"

namespace {
std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("label grid validation", "[core]") {
  CHECK_NOTHROW(rw::LabelGrid({2, 3}, 2, {0, 1, 0, 1, 1, 0}));
  CHECK_THROWS_AS(rw::LabelGrid({2, 3}, 2, {0, 1, 2, 1, 1, 0}),
                  rw::DomainError);  // label >= K
  CHECK_THROWS_AS(rw::LabelGrid({2, 3}, 0, {0, 0, 0, 0, 0, 0}),
                  rw::DomainError);
  CHECK_THROWS_AS(rw::LabelGrid({2, 3}, 2, {0, 1}), rw::ShapeError);
  CHECK_THROWS_AS(rw::LabelGrid({6}, 2, {0, 1, 0, 1, 1, 0}), rw::ShapeError);
  CHECK_THROWS_AS(rw::LabelGrid({2, 0}, 2, {}), rw::ShapeError);
  CHECK_THROWS_AS(rw::LabelGrid({2, 3}, 2, {0, 1, 0, 1, 1, 0}, {1.0}),
                  rw::ShapeError);
  CHECK_THROWS_AS(rw::LabelGrid({2, 3}, 2, {0, 1, 0, 1, 1, 0}, {1.0, -2.0}),
                  rw::DomainError);
  rw::LabelGrid g({2, 3}, 2, {0, 1, 0, 1, 1, 0});
  CHECK(g.spacing == std::vector<double>{1.0, 1.0});  // default fill
  CHECK(g.pixels() == 6);
  CHECK(g.ndim() == 2);
}

TEST_CASE("field layout is channel-fastest", "[core]") {
  rw::Field f({2, 2}, 3);
  f.at(1, 2) = 7.0;
  CHECK(f.values[1 * 3 + 2] == 7.0);
  f.pixel(3)[0] = 9.0;
  CHECK(f.values[9] == 9.0);
  CHECK(f.values.size() == 12);
}

TEST_CASE("one_hot round trip and examples", "[core]") {
  rw::LabelGrid g({1, 2}, 2, {0, 1});
  rw::OneHot y = rw::one_hot(g);
  CHECK(y.at(0, 0) == 1.0);
  CHECK(y.at(0, 1) == 0.0);
  CHECK(y.at(1, 0) == 0.0);
  CHECK(y.at(1, 1) == 1.0);

  rw::LabelGrid g3({1, 1}, 3, {2});
  rw::OneHot y3 = rw::one_hot(g3);
  CHECK(y3.at(0, 0) == 0.0);
  CHECK(y3.at(0, 1) == 0.0);
  CHECK(y3.at(0, 2) == 1.0);

  // Random grid: every row sums to 1 and to_labels inverts one_hot.
  rw::Rng rng(7);
  std::vector<std::uint8_t> lab(10000);
  for (auto& v : lab) v = static_cast<std::uint8_t>(rng.uniform_int(0, 4));
  rw::LabelGrid big({100, 100}, 5, lab);
  rw::OneHot yb = rw::one_hot(big);
  for (rw::Index i = 0; i < yb.pixels(); ++i) {
    double s = 0.0;
    for (double v : yb.pixel(i)) s += v;
    REQUIRE(s == 1.0);
  }
  rw::LabelGrid back = rw::to_labels(yb);
  CHECK(back.labels == big.labels);
  CHECK_NOTHROW(rw::validate(yb));
}

TEST_CASE("validators reject malformed fields", "[core]") {
  rw::OneHot y({1, 2}, 2);
  y.at(0, 0) = 1.0;
  y.at(1, 0) = 0.5;
  y.at(1, 1) = 0.5;
  CHECK_THROWS_AS(rw::validate(y), rw::DomainError);

  rw::ProbField p({1, 1}, 2);
  p.at(0, 0) = 0.6;
  p.at(0, 1) = 0.5;
  CHECK_THROWS_AS(rw::validate(p), rw::DomainError);
  p.at(0, 1) = 0.4;
  CHECK_NOTHROW(rw::validate(p));

  rw::RWMap z({1, 1}, 2);
  z.at(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(rw::validate(z), rw::DomainError);

  rw::Field a({1, 2}, 2), b({2, 1}, 2);
  CHECK_THROWS_AS(rw::require_same_grid(a, b, "test"), rw::ShapeError);
}

TEST_CASE("rng determinism and ranges", "[core]") {
  rw::Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(a.bits() != c.bits());
  CHECK(rw::mix_seed(1, 2) != rw::mix_seed(1, 3));
  CHECK(rw::mix_seed(1, 2) == rw::mix_seed(1, 2));

  rw::Rng r(5);
  for (int i = 0; i < 1000; ++i) {
    const auto v = r.uniform_int(3, 9);
    CHECK(v >= 3);
    CHECK(v <= 9);
  }
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sq / n - 1.0) < 0.03);

  std::vector<int> xs{1, 2, 3, 4, 5, 6, 7};
  auto ys = xs;
  r.shuffle(ys);
  CHECK(std::multiset<int>(ys.begin(), ys.end()) ==
        std::multiset<int>(xs.begin(), xs.end()));
}

TEST_CASE("text label format", "[core]") {
  std::istringstream in("2 3 2\n0 1 0\n1 1 0\n");
  rw::LabelGrid g = rw::parse_labels_text(in);
  CHECK(g.dims == std::vector<int>{2, 3});
  CHECK(g.num_classes == 2);
  CHECK(g.labels == std::vector<std::uint8_t>{0, 1, 0, 1, 1, 0});

  std::ostringstream out;
  rw::write_labels_text(out, g);
  std::istringstream in2(out.str());
  rw::LabelGrid g2 = rw::parse_labels_text(in2);
  CHECK(g2.labels == g.labels);

  std::istringstream bad("2 3 2\n0 1 0\n1 5 0\n");  // label >= K
  CHECK_THROWS_AS(rw::parse_labels_text(bad), rw::CorruptionError);
  std::istringstream trunc("2 3 2\n0 1 0\n");
  CHECK_THROWS_AS(rw::parse_labels_text(trunc), rw::CorruptionError);
}

TEST_CASE("binary grid round trips", "[core]") {
  rw::Rng rng(11);
  std::vector<std::uint8_t> lab(3 * 4 * 5);
  for (auto& v : lab) v = static_cast<std::uint8_t>(rng.uniform_int(0, 3));
  rw::LabelGrid g({3, 4, 5}, 4, lab, {0.5, 1.0, 2.0});
  const std::string path = temp_path("rw_test_labels.rwg");
  rw::write_grid(path, g);
  rw::LabelGrid r = rw::read_labels(path);
  CHECK(r.dims == g.dims);
  CHECK(r.labels == g.labels);
  CHECK(r.num_classes == 4);  // inferred as max label + 1
  CHECK(r.spacing[0] == Catch::Approx(0.5));

  rw::Field f({4, 6}, 3, {1.0, 1.5});
  for (auto& v : f.values) v = rng.uniform(-5.0, 5.0);
  const std::string fpath = temp_path("rw_test_field.rwg");
  rw::write_field(fpath, f, rw::ElemType::f64);
  rw::Field fr = rw::read_field(fpath);
  CHECK(fr.values == f.values);  // f64 round trip is exact
  CHECK(fr.channels == 3);

  rw::write_field(fpath, f, rw::ElemType::f32);
  rw::Field f32 = rw::read_field(fpath);
  for (std::size_t i = 0; i < f.values.size(); ++i)
    CHECK(f32.values[i] == Catch::Approx(f.values[i]).margin(1e-5));
  std::remove(path.c_str());
  std::remove(fpath.c_str());
}

TEST_CASE("binary decode rejects malformed input", "[core]") {
  rw::LabelGrid g({2, 2}, 2, {0, 1, 1, 0});
  std::string bytes = rw::encode_labels(g);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(rw::decode_grid(bad_magic, "t"), rw::FormatError);

  std::string bad_version = bytes;
  bad_version[6] = 9;
  CHECK_THROWS_AS(rw::decode_grid(bad_version, "t"), rw::FormatError);

  std::string truncated = bytes.substr(0, bytes.size() - 1);
  CHECK_THROWS_AS(rw::decode_grid(truncated, "t"), rw::CorruptionError);

  std::string padded = bytes + "x";
  CHECK_THROWS_AS(rw::decode_grid(padded, "t"), rw::CorruptionError);

  // u8 payloads are label grids: a channel count is a format violation.
  rw::Field f({2, 2}, 2);
  std::string fb = rw::encode_field(f, rw::ElemType::f32);
  CHECK(rw::decode_grid(fb, "t").is_labels() == false);
  CHECK_THROWS_AS(rw::encode_field(f, rw::ElemType::u8), rw::FormatError);
}
