#include "bemtopo/kernels.hpp"

#include <cmath>
#include <numbers>

namespace bemtopo {

namespace {

struct Geometry {
  double r;
  Vec2 dr;     // r,i
  double drdn; // dr/dn
};

Geometry geometry(const Vec2& source, const Vec2& field, const Vec2& normal) {
  const Vec2 rv = field - source;
  const double r = rv.norm();
  if (!(r > 0.0)) throw Error("kernel evaluated at coincident source and field points");
  const Vec2 dr = rv / r;
  return {r, dr, dr.dot(normal)};
}

inline double delta(int i, int j) { return i == j ? 1.0 : 0.0; }

}  // namespace

KelvinKernels kelvin_kernels(const Vec2& source, const Vec2& field, const Vec2& normal, const Material& mat) {
  const auto g = geometry(source, field, normal);
  const double nu = mat.poisson_ratio;
  const double mu = mat.shear_modulus();
  const double cu = 1.0 / (8.0 * std::numbers::pi * mu * (1.0 - nu));
  const double ct = -1.0 / (4.0 * std::numbers::pi * (1.0 - nu) * g.r);
  const double log_term = (3.0 - 4.0 * nu) * std::log(1.0 / g.r);

  KelvinKernels k;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      k.U(i, j) = cu * (log_term * delta(i, j) + g.dr[i] * g.dr[j]);
      k.T(i, j) = ct * (g.drdn * ((1.0 - 2.0 * nu) * delta(i, j) + 2.0 * g.dr[i] * g.dr[j]) -
                        (1.0 - 2.0 * nu) * (g.dr[i] * normal[j] - g.dr[j] * normal[i]));
    }
  }
  return k;
}

StressKernels stress_kernels(const Vec2& source, const Vec2& field, const Vec2& normal, const Material& mat) {
  const auto g = geometry(source, field, normal);
  const double nu = mat.poisson_ratio;
  const double mu = mat.shear_modulus();
  const double cd = 1.0 / (4.0 * std::numbers::pi * (1.0 - nu) * g.r);
  const double cs = mu / (2.0 * std::numbers::pi * (1.0 - nu) * g.r * g.r);
  const Vec2& r = g.dr;
  const Vec2& n = normal;

  StressKernels k;
  for (int kk = 0; kk < 2; ++kk) {
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        k.D[kk](i, j) = cd * ((1.0 - 2.0 * nu) * (delta(kk, i) * r[j] + delta(kk, j) * r[i] - delta(i, j) * r[kk]) +
                              2.0 * r[i] * r[j] * r[kk]);
        k.S[kk](i, j) =
            cs * (2.0 * g.drdn *
                      ((1.0 - 2.0 * nu) * delta(i, j) * r[kk] + nu * (delta(i, kk) * r[j] + delta(j, kk) * r[i]) -
                       4.0 * r[i] * r[j] * r[kk]) +
                  2.0 * nu * (n[i] * r[j] * r[kk] + n[j] * r[i] * r[kk]) +
                  (1.0 - 2.0 * nu) * (2.0 * n[kk] * r[i] * r[j] + n[j] * delta(i, kk) + n[i] * delta(j, kk)) -
                  (1.0 - 4.0 * nu) * n[kk] * delta(i, j));
      }
    }
  }
  return k;
}

}  // namespace bemtopo
