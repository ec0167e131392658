#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "rw.hpp"

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("1-D squared transform examples", "[edt]") {
  // Single seed point.
  auto r1 = rw::squared_edt_1d(std::vector<double>{0.0, kInf, kInf}, 1.0);
  CHECK(r1 == std::vector<double>{0.0, 1.0, 4.0});

  // Two seeds, spacing 2.
  auto r2 = rw::squared_edt_1d(std::vector<double>{kInf, 0.0, kInf, 0.0}, 2.0);
  CHECK(r2 == std::vector<double>{4.0, 0.0, 4.0, 0.0});

  // The spec row: seeds at offsets 2..4.
  auto r3 = rw::squared_edt_1d(
      std::vector<double>{kInf, kInf, 0.0, 0.0, 0.0, kInf, kInf}, 1.0);
  CHECK(r3 == std::vector<double>{4.0, 1.0, 0.0, 0.0, 0.0, 1.0, 4.0});

  // No seeds: stays infinite.
  auto r4 = rw::squared_edt_1d(std::vector<double>{kInf, kInf}, 1.0);
  CHECK(r4[0] == kInf);
  CHECK(r4[1] == kInf);
}

TEST_CASE("1-D random rows match the brute-force minimum", "[edt]") {
  rw::Rng rng(123);
  for (int t = 0; t < 50; ++t) {
    const int n = 64;
    const double sp = 0.5 + 1.5 * rng.uniform();
    std::vector<double> f(n, kInf);
    bool any = false;
    for (int i = 0; i < n; ++i)
      if (rng.uniform() < 0.2) {
        f[i] = 0.0;
        any = true;
      }
    if (!any) f[static_cast<std::size_t>(rng.uniform_int(0, n - 1))] = 0.0;
    auto got = rw::squared_edt_1d(f, sp);
    for (int i = 0; i < n; ++i) {
      double best = kInf;
      for (int q = 0; q < n; ++q)
        if (f[q] == 0.0) {
          const double d = sp * (i - q);
          best = std::min(best, d * d);
        }
      REQUIRE(got[i] == Catch::Approx(best).epsilon(1e-13));
    }
  }
}

TEST_CASE("n-D transform matches brute force", "[edt]") {
  rw::Rng rng(321);
  for (int t = 0; t < 40; ++t) {
    std::vector<int> dims;
    if (t % 2 == 0)
      dims = {static_cast<int>(rng.uniform_int(2, 24)),
              static_cast<int>(rng.uniform_int(2, 24))};
    else
      dims = {static_cast<int>(rng.uniform_int(2, 10)),
              static_cast<int>(rng.uniform_int(2, 10)),
              static_cast<int>(rng.uniform_int(2, 10))};
    std::vector<double> spacing;
    for (std::size_t a = 0; a < dims.size(); ++a)
      spacing.push_back(0.5 + 1.5 * rng.uniform());
    const rw::Index n = rw::element_count(dims);
    std::vector<double> seed(n, kInf);
    std::vector<std::uint8_t> mask(n, 0);
    for (rw::Index i = 0; i < n; ++i)
      if (rng.uniform() < 0.15) {
        seed[i] = 0.0;
        mask[i] = 1;
      }
    if (std::count(mask.begin(), mask.end(), 1) == 0) {
      seed[0] = 0.0;
      mask[0] = 1;
    }
    auto got = rw::squared_edt(seed, dims, spacing);
    auto want = oracle::brute_sq_edt(mask, dims, spacing);
    for (rw::Index i = 0; i < n; ++i)
      REQUIRE(std::sqrt(got[i]) ==
              Catch::Approx(std::sqrt(want[i])).margin(1e-10));
  }
}

TEST_CASE("anisotropy scales axis distances", "[edt]") {
  // A single seed; doubling the spacing of one axis doubles distances
  // measured purely along that axis.
  std::vector<int> dims{5, 5};
  std::vector<double> seed(25, kInf);
  seed[12] = 0.0;  // center
  auto iso = rw::squared_edt(seed, dims, {1.0, 1.0});
  seed.assign(25, kInf);
  seed[12] = 0.0;
  auto aniso = rw::squared_edt(seed, dims, {2.0, 1.0});
  CHECK(aniso[2] == 4.0 * iso[2]);    // two rows above the seed
  CHECK(aniso[10] == iso[10]);        // same row, two columns left
}

TEST_CASE("class_edt signed rows match the frozen example", "[edt]") {
  rw::LabelGrid g({1, 7}, 2, {0, 0, 1, 1, 1, 0, 0});
  rw::SignedDistanceField sdf = rw::class_edt(g);
  REQUIRE(sdf.all_ok());
  const std::vector<double> want1{2, 1, -1, -2, -1, 1, 2};
  const std::vector<double> want0{-2, -1, 1, 2, 1, -1, -2};
  for (int i = 0; i < 7; ++i) {
    CHECK(sdf.at(i, 1) == Catch::Approx(want1[i]).margin(1e-12));
    CHECK(sdf.at(i, 0) == Catch::Approx(want0[i]).margin(1e-12));
  }
}

TEST_CASE("class_edt sign matches membership, brute-force magnitudes", "[edt]") {
  rw::Rng rng(99);
  for (int t = 0; t < 15; ++t) {
    const int h = static_cast<int>(rng.uniform_int(3, 14));
    const int w = static_cast<int>(rng.uniform_int(3, 14));
    std::vector<std::uint8_t> lab(static_cast<std::size_t>(h) * w);
    for (auto& v : lab) v = rng.uniform() < 0.4 ? 1 : 0;
    lab[0] = 0;
    lab[1] = 1;  // both classes present
    std::vector<double> spacing{0.5 + rng.uniform(), 0.5 + rng.uniform()};
    rw::LabelGrid g({h, w}, 2, lab, spacing);
    rw::SignedDistanceField sdf = rw::class_edt(g);
    REQUIRE(sdf.all_ok());
    for (int cls = 0; cls < 2; ++cls) {
      std::vector<std::uint8_t> in(lab.size()), out(lab.size());
      for (std::size_t i = 0; i < lab.size(); ++i) {
        in[i] = lab[i] == cls;
        out[i] = lab[i] != cls;
      }
      auto d_out = oracle::brute_sq_edt(in, g.dims, spacing);   // dist to class
      auto d_in = oracle::brute_sq_edt(out, g.dims, spacing);   // dist to rest
      for (std::size_t i = 0; i < lab.size(); ++i) {
        const double want = lab[i] == cls ? -std::sqrt(d_in[i])
                                          : std::sqrt(d_out[i]);
        REQUIRE(sdf.at(static_cast<rw::Index>(i), cls) ==
                Catch::Approx(want).margin(1e-10));
      }
    }
  }
}

TEST_CASE("class_edt flags degenerate channels", "[edt]") {
  rw::LabelGrid g({2, 2}, 3, {0, 0, 1, 1});  // class 2 absent
  rw::SignedDistanceField sdf = rw::class_edt(g);
  CHECK(sdf.status[0] == rw::ChannelStatus::ok);
  CHECK(sdf.status[2] == rw::ChannelStatus::empty_class);
  CHECK(sdf.at(0, 2) == kInf);

  rw::LabelGrid full({2, 2}, 1, {0, 0, 0, 0});
  rw::SignedDistanceField s2 = rw::class_edt(full);
  CHECK(s2.status[0] == rw::ChannelStatus::full_class);
  CHECK(s2.at(0, 0) == -kInf);
  CHECK_FALSE(s2.all_ok());
}
