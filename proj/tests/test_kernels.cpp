#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bemtopo/kernels.hpp"
#include "support.hpp"

using namespace bemtopo;
using namespace testing;

namespace {

// du_i/dx_j of the displacement due to a unit force in direction k, by
// central differences in the field point.
Mat2 field_gradient(int k, const Vec2& src, const Vec2& x, const Material& m, double h = 1e-5) {
  Mat2 g;
  for (int j = 0; j < 2; ++j) {
    Vec2 dx = Vec2::Zero();
    dx[j] = h;
    const Mat2 up = kelvin_u_lame(src, x + dx, m);
    const Mat2 um = kelvin_u_lame(src, x - dx, m);
    for (int i = 0; i < 2; ++i) g(i, j) = (up(k, i) - um(k, i)) / (2 * h);
  }
  return g;
}

// Same, differentiating with respect to the source point.
template <class F>
Mat2 source_gradient(F&& u_of_source, const Vec2& src, double h = 1e-5) {
  Mat2 g;
  for (int j = 0; j < 2; ++j) {
    Vec2 dx = Vec2::Zero();
    dx[j] = h;
    const Vec2 up = u_of_source(src + dx);
    const Vec2 um = u_of_source(src - dx);
    for (int i = 0; i < 2; ++i) g(i, j) = (up[i] - um[i]) / (2 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("U matches the Lame-form transcription") {
  const Material m{1.0, 0.3};
  const auto k = kelvin_kernels(Vec2(0, 0), Vec2(1, 0), Vec2(0, 1), m);
  const Mat2 ref = kelvin_u_lame(Vec2(0, 0), Vec2(1, 0), m);
  CHECK((k.U - ref).norm() < 1e-14);
  // At r = (1, 0) the log term vanishes: U = diag(1, 0) / (8 pi mu (1 - nu)).
  const double c = 1.0 / (8.0 * std::numbers::pi * m.shear_modulus() * 0.7);
  CHECK(k.U(0, 0) == doctest::Approx(c).epsilon(1e-14));
  CHECK(std::abs(k.U(1, 1)) < 1e-16);

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int t = 0; t < 200; ++t) {
    const Material mt{0.5 + std::abs(u(rng)), 0.2 * std::abs(u(rng))};
    const Vec2 s(u(rng), u(rng));
    const Vec2 x(u(rng), u(rng));
    const Mat2 a = kelvin_kernels(s, x, Vec2(1, 0), mt).U;
    CHECK((a - kelvin_u_lame(s, x, mt)).norm() < 1e-12 * (1.0 + a.norm()));
  }
}

TEST_CASE("U symmetry and reciprocity") {
  const Material m{3.0, 0.2};
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const Vec2 s(u(rng), u(rng));
    const Vec2 x(u(rng), u(rng));
    const Mat2 a = kelvin_kernels(s, x, Vec2(0, 1), m).U;
    const Mat2 b = kelvin_kernels(x, s, Vec2(0, 1), m).U;
    CHECK(std::abs(a(0, 1) - a(1, 0)) < 1e-15);
    CHECK((a - b).norm() < 1e-14);
  }
}

TEST_CASE("T is the traction of the Kelvin displacement field") {
  const Material m{1.0, 0.3};
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const Vec2 s(u(rng), u(rng));
    const Vec2 x = s + Vec2(0.3 + std::abs(u(rng)), u(rng));
    const Vec2 n = Vec2(u(rng), u(rng)).normalized();
    const Mat2 tk = kelvin_kernels(s, x, n, m).T;
    for (int k = 0; k < 2; ++k) {
      const Vec2 traction = hooke(field_gradient(k, s, x, m), m) * n;
      CHECK(std::abs(tk(k, 0) - traction[0]) < 1e-7);
      CHECK(std::abs(tk(k, 1) - traction[1]) < 1e-7);
    }
  }
}

TEST_CASE("stress kernels differentiate the displacement identity") {
  const Material m{2.0, 0.25};
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    const Vec2 s(u(rng), u(rng));
    const Vec2 x = s + Vec2(u(rng), 0.4 + std::abs(u(rng)));
    const Vec2 n = Vec2(u(rng), u(rng)).normalized();
    const auto sk = stress_kernels(s, x, n, m);
    for (int k = 0; k < 2; ++k) {
      // Interior u_i(source) picks up U(i, k) t_k and -T(i, k) u_k.
      const Mat2 d_ref = hooke(source_gradient(
                                   [&](const Vec2& p) {
                                     const Mat2 uk = kelvin_kernels(p, x, n, m).U;
                                     return Vec2(uk(0, k), uk(1, k));
                                   },
                                   s),
                               m);
      const Mat2 s_ref = hooke(source_gradient(
                                   [&](const Vec2& p) {
                                     const Mat2 tk = kelvin_kernels(p, x, n, m).T;
                                     return Vec2(tk(0, k), tk(1, k));
                                   },
                                   s),
                               m);
      CHECK((sk.D[static_cast<std::size_t>(k)] - d_ref).norm() < 1e-6 * (1.0 + d_ref.norm()));
      CHECK((sk.S[static_cast<std::size_t>(k)] - s_ref).norm() < 1e-6 * (1.0 + s_ref.norm()));
    }
  }
}

TEST_CASE("coincident points are rejected") {
  const Material m;
  CHECK_THROWS_AS(kelvin_kernels(Vec2(1, 1), Vec2(1, 1), Vec2(1, 0), m), Error);
  CHECK_THROWS_AS(stress_kernels(Vec2(1, 1), Vec2(1, 1), Vec2(1, 0), m), Error);
}
