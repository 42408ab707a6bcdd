#include "bemtopo/bem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "bemtopo/kernels.hpp"

namespace bemtopo {

namespace {

constexpr int kGaussOrder = 8;
constexpr int kMaxDepth = 40;

struct GaussRule {
  std::array<double, kGaussOrder> x{};  // on [0, 1]
  std::array<double, kGaussOrder> w{};
};

const GaussRule& gauss_rule() {
  static const GaussRule rule = [] {
    using Gauss = boost::math::quadrature::gauss<double, kGaussOrder>;
    GaussRule g;
    const auto& a = Gauss::abscissa();
    const auto& w = Gauss::weights();
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      g.x[n] = 0.5 * (1.0 - a[i]);
      g.w[n++] = 0.5 * w[i];
      g.x[n] = 0.5 * (1.0 + a[i]);
      g.w[n++] = 0.5 * w[i];
    }
    return g;
  }();
  return rule;
}

// phi_k(xi) = a xi^2 + b xi + c for nodes at 0.25, 0.5, 0.75.
struct Quadratic {
  double a, b, c;
  double operator()(double xi) const { return (a * xi + b) * xi + c; }
};
constexpr std::array<Quadratic, 3> kShape{{{8.0, -10.0, 3.0}, {-16.0, 16.0, -3.0}, {8.0, -6.0, 1.0}}};

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + s * ab)).norm();
}

/// Calls f(xi, point, weight) over [xa, xb] of the element, subdividing until
/// every piece is no longer than its distance from `source`.
template <class F>
void integrate_adaptive(const Vec2& source, const BoundaryElement& e, double xa, double xb, int depth, F& f) {
  const Vec2 pa = e.point_at(xa);
  const Vec2 pb = e.point_at(xb);
  const double len = (pb - pa).norm();
  const double d = point_segment_distance(source, pa, pb);
  if (!(d > 0.0)) throw Error("regular element integration requested for a source on the element");
  if (len > d && depth < kMaxDepth) {
    const double xm = 0.5 * (xa + xb);
    integrate_adaptive(source, e, xa, xm, depth + 1, f);
    integrate_adaptive(source, e, xm, xb, depth + 1, f);
    return;
  }
  const auto& g = gauss_rule();
  const double jac = (xb - xa) * e.length();
  for (int q = 0; q < kGaussOrder; ++q) {
    const double xi = xa + (xb - xa) * g.x[q];
    f(xi, e.point_at(xi), g.w[q] * jac);
  }
}

template <class F>
void integrate_adaptive(const Vec2& source, const BoundaryElement& e, F&& f) {
  integrate_adaptive(source, e, 0.0, 1.0, 0, f);
}

// int_0^l tau^n ln(tau) dtau
double log_moment(double l, int n) {
  if (l <= 0.0) return 0.0;
  const double np1 = n + 1.0;
  return std::pow(l, np1) / np1 * (std::log(l) - 1.0 / np1);
}

Eigen::Matrix<double, 6, 1> stack(const std::array<Vec2, 3>& v) {
  Eigen::Matrix<double, 6, 1> out;
  for (int k = 0; k < 3; ++k) out.segment<2>(2 * k) = v[static_cast<std::size_t>(k)];
  return out;
}

std::array<Vec2, 3> unstack(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return {Vec2(v[0], v[1]), Vec2(v[2], v[3]), Vec2(v[4], v[5])};
}

Vec2 interpolate(const std::array<Vec2, 3>& nodal, double xi) {
  const auto phi = shape_functions(xi);
  return phi[0] * nodal[0] + phi[1] * nodal[1] + phi[2] * nodal[2];
}

}  // namespace

DistanceViolation::DistanceViolation(const Vec2& p, double dist, double req)
    : Error([&] {
        std::ostringstream os;
        os << "interior point (" << p.x() << ", " << p.y() << ") is " << dist
           << " from the boundary; at least " << req << " required";
        return os.str();
      }()),
      point(p),
      distance(dist),
      required(req) {}

std::array<double, 3> shape_functions(double xi) { return {kShape[0](xi), kShape[1](xi), kShape[2](xi)}; }

ElementIntegrals integrate_element(const Vec2& source, const BoundaryElement& element, const Material& mat) {
  ElementIntegrals out;
  out.H.setZero();
  out.G.setZero();
  const Vec2 n = element.normal();
  integrate_adaptive(source, element, [&](double xi, const Vec2& x, double w) {
    const auto k = kelvin_kernels(source, x, n, mat);
    const auto phi = shape_functions(xi);
    for (int node = 0; node < 3; ++node) {
      const double wp = w * phi[static_cast<std::size_t>(node)];
      out.H.block<2, 2>(0, 2 * node) += wp * k.T;
      out.G.block<2, 2>(0, 2 * node) += wp * k.U;
    }
  });
  return out;
}

ElementIntegrals integrate_self(int node, const BoundaryElement& element, const Material& mat) {
  const double nu = mat.poisson_ratio;
  const double mu = mat.shear_modulus();
  const double len = element.length();
  const Vec2 t = element.tangent();
  const Vec2 n = element.normal();
  const double xi0 = kCollocationXi[static_cast<std::size_t>(node)];

  const double ct = (1.0 - 2.0 * nu) / (4.0 * std::numbers::pi * (1.0 - nu));
  const double cu = 1.0 / (8.0 * std::numbers::pi * mu * (1.0 - nu));
  Mat2 skew;
  Mat2 tt;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      skew(i, j) = t[i] * n[j] - t[j] * n[i];
      tt(i, j) = t[i] * t[j];
    }
  }

  ElementIntegrals out;
  for (int k = 0; k < 3; ++k) {
    const Quadratic& phi = kShape[static_cast<std::size_t>(k)];
    // PV int_0^1 phi/(xi - xi0): regular divided difference plus log term.
    const double pv = phi.a * (0.5 + xi0) + phi.b + phi(xi0) * std::log((1.0 - xi0) / xi0);
    // int_0^1 phi(xi) ln|xi - xi0| dxi, split at xi0.
    const double slope = 2.0 * phi.a * xi0 + phi.b;
    const double right = phi(xi0) * log_moment(1.0 - xi0, 0) + slope * log_moment(1.0 - xi0, 1) +
                         phi.a * log_moment(1.0 - xi0, 2);
    const double left = phi(xi0) * log_moment(xi0, 0) - slope * log_moment(xi0, 1) + phi.a * log_moment(xi0, 2);
    const double mean = phi.a / 3.0 + phi.b / 2.0 + phi.c;
    // int phi ln(1/r) ds = -L (ln L * int phi + int phi ln|xi - xi0|)
    const double log_integral = -len * (std::log(len) * mean + left + right);

    out.H.block<2, 2>(0, 2 * k) = ct * pv * skew;
    out.G.block<2, 2>(0, 2 * k) = cu * ((3.0 - 4.0 * nu) * log_integral * Mat2::Identity() + len * mean * tt);
  }
  return out;
}

namespace {

// Row-element integrals for all three collocation points, including the
// free term on the diagonal of the self block.
void row_integrals(const BoundaryElement& row, const BoundaryElement& col, const Material& mat,
                   Block6& H, Block6& G) {
  const bool self = row.id == col.id;
  for (int m = 0; m < 3; ++m) {
    const auto in = self ? integrate_self(m, col, mat) : integrate_element(row.collocation(m), col, mat);
    H.block<2, 6>(2 * m, 0) = in.H;
    G.block<2, 6>(2 * m, 0) = in.G;
    if (self) H.block<2, 2>(2 * m, 2 * m) += 0.5 * Mat2::Identity();
  }
}

}  // namespace

Block6 influence_block(const BoundaryElement& row, const BoundaryElement& col, const Material& mat) {
  Block6 H;
  Block6 G;
  row_integrals(row, col, mat, H, G);
  return col.bc.is_dirichlet() ? Block6(-G) : H;
}

Vector6 rhs_block(const BoundaryElement& row, const BoundaryElement& col, const Material& mat) {
  if (col.bc.is_homogeneous()) return Vector6::Zero();
  Block6 H;
  Block6 G;
  row_integrals(row, col, mat, H, G);
  const Vector6 data = stack(col.bc.values);
  return col.bc.is_dirichlet() ? Vector6(-H * data) : Vector6(G * data);
}

Eigen::VectorXd assemble_rhs(const BoundaryModel& model, const Material& mat) {
  const auto ns = static_cast<Eigen::Index>(model.size());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(6 * ns);
  for (const auto& col : model.elements) {
    if (col.bc.is_homogeneous()) continue;
    for (Eigen::Index r = 0; r < ns; ++r) {
      rhs.segment<6>(6 * r) += rhs_block(model.elements[static_cast<std::size_t>(r)], col, mat);
    }
  }
  return rhs;
}

BemSystem assemble(const BoundaryModel& model, const Material& mat) {
  if (model.empty()) throw Error("cannot assemble an empty boundary model");
  mat.validate();
  const auto ns = static_cast<Eigen::Index>(model.size());
  BemSystem sys;
  sys.matrix.resize(6 * ns, 6 * ns);
  sys.order.reserve(model.size());
  for (Eigen::Index r = 0; r < ns; ++r) {
    const auto& row = model.elements[static_cast<std::size_t>(r)];
    sys.order.push_back(row.id);
    sys.dof_map.emplace(row.id, static_cast<std::size_t>(6 * r));
    for (Eigen::Index c = 0; c < ns; ++c) {
      sys.matrix.block<6, 6>(6 * r, 6 * c) = influence_block(row, model.elements[static_cast<std::size_t>(c)], mat);
    }
  }
  sys.rhs = assemble_rhs(model, mat);
  return sys;
}

BemSystem assemble_incremental(const BemSystem& previous, const BoundaryModel& model, const Material& mat) {
  if (model.empty()) throw Error("cannot assemble an empty boundary model");
  const auto ns = static_cast<Eigen::Index>(model.size());
  std::vector<Eigen::Index> old_offset(model.size(), -1);
  for (std::size_t e = 0; e < model.size(); ++e) {
    const auto it = previous.dof_map.find(model.elements[e].id);
    if (it != previous.dof_map.end()) old_offset[e] = static_cast<Eigen::Index>(it->second);
  }
  BemSystem sys;
  sys.matrix.resize(6 * ns, 6 * ns);
  sys.order.reserve(model.size());
  for (Eigen::Index r = 0; r < ns; ++r) {
    const auto& row = model.elements[static_cast<std::size_t>(r)];
    sys.order.push_back(row.id);
    sys.dof_map.emplace(row.id, static_cast<std::size_t>(6 * r));
    const Eigen::Index orow = old_offset[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < ns; ++c) {
      const Eigen::Index ocol = old_offset[static_cast<std::size_t>(c)];
      if (orow >= 0 && ocol >= 0) {
        sys.matrix.block<6, 6>(6 * r, 6 * c) = previous.matrix.block<6, 6>(orow, ocol);
      } else {
        sys.matrix.block<6, 6>(6 * r, 6 * c) =
            influence_block(row, model.elements[static_cast<std::size_t>(c)], mat);
      }
    }
  }
  sys.rhs = assemble_rhs(model, mat);
  return sys;
}

Eigen::VectorXd solve_unknowns(const BemSystem& system) {
  if (system.size() == 0) throw Error("empty system");
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system.matrix);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    std::ostringstream os;
    os << "system matrix is singular to working precision (reciprocal condition estimate " << rcond
       << "); rigid-body motion may be unconstrained";
    throw SingularSystem(os.str());
  }
  Eigen::VectorXd x = lu.solve(system.rhs);
  if (!x.allFinite()) throw SingularSystem("LU solve produced non-finite unknowns");
  return x;
}

BoundarySolution solve(const BemSystem& system, const BoundaryModel& model) {
  return make_solution(model, solve_unknowns(system));
}

BoundarySolution make_solution(const BoundaryModel& model, const Eigen::VectorXd& unknowns) {
  if (static_cast<std::size_t>(unknowns.size()) != kDofsPerElement * model.size()) {
    throw Error("unknown vector size does not match the boundary model");
  }
  BoundarySolution sol;
  sol.u.reserve(model.size());
  sol.t.reserve(model.size());
  for (std::size_t e = 0; e < model.size(); ++e) {
    const auto& el = model.elements[e];
    const auto solved = unstack(unknowns.segment<6>(static_cast<Eigen::Index>(6 * e)));
    if (el.bc.is_dirichlet()) {
      sol.u.push_back(el.bc.values);
      sol.t.push_back(solved);
    } else {
      sol.u.push_back(solved);
      sol.t.push_back(el.bc.values);
    }
  }
  return sol;
}

Mat2 stress_from_strain(const Mat2& epsilon, const Material& mat) {
  return mat.lame_lambda() * epsilon.trace() * Mat2::Identity() + 2.0 * mat.shear_modulus() * epsilon;
}

Mat2 strain_from_stress(const Mat2& sigma, const Material& mat) {
  const double lambda = mat.lame_lambda();
  const double mu = mat.shear_modulus();
  const double tr_eps = sigma.trace() / (2.0 * (lambda + mu));
  return (sigma - lambda * tr_eps * Mat2::Identity()) / (2.0 * mu);
}

double boundary_distance(const Vec2& p, const BoundaryModel& model) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& e : model.elements) d = std::min(d, point_segment_distance(p, e.start, e.end));
  return d;
}

Vec2 interior_displacement(const Vec2& p, const BoundarySolution& sol, const BoundaryModel& model,
                           const Material& mat) {
  Vec2 u = Vec2::Zero();
  for (std::size_t e = 0; e < model.size(); ++e) {
    const auto& el = model.elements[e];
    const Vec2 n = el.normal();
    integrate_adaptive(p, el, [&](double xi, const Vec2& x, double w) {
      const auto k = kelvin_kernels(p, x, n, mat);
      u += w * (k.U * interpolate(sol.t[e], xi) - k.T * interpolate(sol.u[e], xi));
    });
  }
  return u;
}

InteriorState interior_state(const Vec2& p, const BoundarySolution& sol, const BoundaryModel& model,
                             const Material& mat) {
  const double required = 0.4 * model.min_element_length();
  const double dist = boundary_distance(p, model);
  if (dist < required) throw DistanceViolation(p, dist, required);

  InteriorState st;
  for (std::size_t e = 0; e < model.size(); ++e) {
    const auto& el = model.elements[e];
    const Vec2 n = el.normal();
    integrate_adaptive(p, el, [&](double xi, const Vec2& x, double w) {
      const auto kk = kelvin_kernels(p, x, n, mat);
      const auto ks = stress_kernels(p, x, n, mat);
      const Vec2 t = interpolate(sol.t[e], xi);
      const Vec2 u = interpolate(sol.u[e], xi);
      st.u += w * (kk.U * t - kk.T * u);
      for (int k = 0; k < 2; ++k) st.sigma += w * (ks.D[k] * t[k] - ks.S[k] * u[k]);
    });
  }
  st.sigma = 0.5 * (st.sigma + st.sigma.transpose());
  st.epsilon = strain_from_stress(st.sigma, mat);
  return st;
}

double strain_energy(const BoundarySolution& sol, const BoundaryModel& model) {
  if (sol.u.size() != model.size() || sol.t.size() != model.size()) {
    throw Error("boundary solution does not match the boundary model");
  }
  const auto& g = gauss_rule();
  double work = 0.0;
  for (std::size_t e = 0; e < model.size(); ++e) {
    const double len = model.elements[e].length();
    for (int q = 0; q < kGaussOrder; ++q) {
      work += g.w[q] * len * interpolate(sol.t[e], g.x[q]).dot(interpolate(sol.u[e], g.x[q]));
    }
  }
  return 0.5 * work;
}

}  // namespace bemtopo
