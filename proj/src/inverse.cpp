#include "bemtopo/inverse.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>
#include <vector>

namespace bemtopo {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void count(OpCounter* c, Eigen::Index rows, Eigen::Index inner, Eigen::Index cols) {
  if (c) c->record(rows, inner, cols);
}

Eigen::MatrixXd invert_schur(const Eigen::MatrixXd& s, const UpdateOptions& opts, bool* regularized) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(s);
  if (lu.rcond() > opts.schur_rcond) {
    count(opts.counter, s.rows(), s.rows(), s.rows());
    return lu.inverse();
  }
  if (!opts.allow_regularization) {
    std::ostringstream os;
    os << "Schur complement is singular (rcond " << lu.rcond()
       << "); a new closed cavity leaves rigid-body modes unconstrained";
    throw SingularUpdate(os.str());
  }
  bool truncated = false;
  Eigen::MatrixXd inv = regularized_inverse(s, opts.svd_rel_tol, &truncated);
  if (regularized) *regularized = truncated || *regularized;
  return inv;
}

std::unordered_map<ElementId, std::size_t> make_dof_map(const std::vector<ElementId>& order) {
  std::unordered_map<ElementId, std::size_t> map;
  for (std::size_t i = 0; i < order.size(); ++i) map.emplace(order[i], kDofsPerElement * i);
  return map;
}

}  // namespace

void OpCounter::record(Eigen::Index rows, Eigen::Index inner, Eigen::Index cols) {
  multiplies += static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(inner) *
                static_cast<std::uint64_t>(cols);
  largest_min_dim = std::max(largest_min_dim, std::min({rows, inner, cols}));
}

Eigen::MatrixXd regularized_inverse(const Eigen::MatrixXd& s, double rel_tol, bool* truncated) {
  if (!(rel_tol > 0.0)) throw Error("regularized_inverse requires rel_tol > 0");
  if (truncated) *truncated = false;
  if (s.size() == 0) return Eigen::MatrixXd(s.cols(), s.rows());
  Eigen::BDCSVD<Eigen::MatrixXd> svd(s, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double threshold = rel_tol * sv[0];
  Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > 0.0 && sv[i] >= threshold) {
      inv_sv[i] = 1.0 / sv[i];
    } else if (truncated) {
      *truncated = true;
    }
  }
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

namespace {

// `out` is (m+k)x(m+k) with A^-1 in its leading m x m block; fills the rest.
void extend_in_place(Eigen::MatrixXd& out, Eigen::Index m, const Eigen::Ref<const Eigen::MatrixXd>& b,
                     const Eigen::Ref<const Eigen::MatrixXd>& c, const Eigen::Ref<const Eigen::MatrixXd>& d,
                     const UpdateOptions& opts, bool* regularized) {
  const Eigen::Index k = d.rows();
  auto a_inv = out.topLeftCorner(m, m);
  Eigen::MatrixXd x(m, k);
  x.noalias() = a_inv * b;  // A^-1 B
  count(opts.counter, m, m, k);
  Eigen::MatrixXd y(k, m);
  y.noalias() = c * a_inv;  // C A^-1
  count(opts.counter, k, m, m);
  Eigen::MatrixXd s = d;
  s.noalias() -= c * x;
  count(opts.counter, k, m, k);
  const Eigen::MatrixXd s_inv = invert_schur(s, opts, regularized);
  auto z = out.bottomLeftCorner(k, m);
  z.noalias() = s_inv * y;  // S^-1 C A^-1
  count(opts.counter, k, k, m);

  a_inv.noalias() += x * z;
  count(opts.counter, m, k, m);
  out.topRightCorner(m, k).noalias() = -x * s_inv;
  count(opts.counter, m, k, k);
  z = -z;
  out.bottomRightCorner(k, k) = s_inv;
}

// Writes E - F H^-1 G into the leading block of `out`.
void shrink_into(const Eigen::MatrixXd& full_inv, const std::vector<Eigen::Index>& keep,
                 const std::vector<Eigen::Index>& removed, Eigen::MatrixXd& out, OpCounter* counter) {
  const auto m = static_cast<Eigen::Index>(keep.size());
  const auto k = static_cast<Eigen::Index>(removed.size());
  auto e = out.topLeftCorner(m, m);
  e = full_inv(keep, keep);
  if (k == 0) return;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(full_inv(removed, removed));
  if (!(lu.rcond() > 1e-14)) {
    throw SingularUpdate("shrink_inverse: removed block of the inverse is singular");
  }
  const Eigen::MatrixXd hg = lu.solve(Eigen::MatrixXd(full_inv(removed, keep)));  // H^-1 G
  count(counter, k, k, m);
  const Eigen::MatrixXd f = full_inv(keep, removed);
  e.noalias() -= f * hg;
  count(counter, m, k, m);
}

}  // namespace

Eigen::MatrixXd extend_inverse(const Eigen::MatrixXd& a_inv, const Eigen::MatrixXd& b, const Eigen::MatrixXd& c,
                               const Eigen::MatrixXd& d, const UpdateOptions& opts, bool* regularized) {
  const Eigen::Index m = a_inv.rows();
  const Eigen::Index k = d.rows();
  if (a_inv.cols() != m || b.rows() != m || b.cols() != k || c.rows() != k || c.cols() != m || d.cols() != k) {
    throw Error("extend_inverse: block dimensions do not match");
  }
  if (k == 0) return a_inv;
  Eigen::MatrixXd out(m + k, m + k);
  out.topLeftCorner(m, m) = a_inv;
  extend_in_place(out, m, b, c, d, opts, regularized);
  return out;
}

Eigen::MatrixXd shrink_inverse(const Eigen::MatrixXd& e, const Eigen::MatrixXd& f, const Eigen::MatrixXd& g,
                               const Eigen::MatrixXd& h, OpCounter* counter) {
  const Eigen::Index m = e.rows();
  const Eigen::Index k = h.rows();
  if (e.cols() != m || f.rows() != m || f.cols() != k || g.rows() != k || g.cols() != m || h.cols() != k) {
    throw Error("shrink_inverse: block dimensions do not match");
  }
  if (k == 0) return e;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(h);
  if (!(lu.rcond() > 1e-14)) {
    throw SingularUpdate("shrink_inverse: removed block of the inverse is singular");
  }
  const Eigen::MatrixXd hg = lu.solve(g);  // H^-1 G
  count(counter, k, k, m);
  Eigen::MatrixXd out = e;
  out.noalias() -= f * hg;
  count(counter, m, k, m);
  return out;
}

Eigen::MatrixXd shrink_inverse(const Eigen::MatrixXd& full_inv, std::span<const Eigen::Index> keep,
                               std::span<const Eigen::Index> removed, OpCounter* counter) {
  const std::vector<Eigen::Index> ki(keep.begin(), keep.end());
  const std::vector<Eigen::Index> ri(removed.begin(), removed.end());
  for (const auto i : ki) {
    if (i < 0 || i >= full_inv.rows()) throw Error("shrink_inverse: index out of range");
  }
  for (const auto i : ri) {
    if (i < 0 || i >= full_inv.rows()) throw Error("shrink_inverse: index out of range");
  }
  Eigen::MatrixXd out(ki.size(), ki.size());
  shrink_into(full_inv, ki, ri, out, counter);
  return out;
}

double inverse_drift(const Eigen::MatrixXd& matrix, const Eigen::MatrixXd& inverse) {
  Eigen::MatrixXd r = matrix * inverse;
  r.diagonal().array() -= 1.0;
  return r.cwiseAbs().rowwise().sum().maxCoeff();
}

InverseState refresh_inverse(const BemSystem& system) {
  if (system.size() == 0) throw Error("refresh_inverse: empty system");
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system.matrix);
  if (!(lu.rcond() > 1e-14)) {
    std::ostringstream os;
    os << "system matrix is singular (reciprocal condition estimate " << lu.rcond() << ")";
    throw SingularSystem(os.str());
  }
  InverseState st;
  st.inverse = lu.inverse();
  st.order = system.order;
  st.dof_map = make_dof_map(st.order);
  st.drift = inverse_drift(system.matrix, st.inverse);
  return st;
}

InverseState apply_diff(const InverseState& state, const BemSystem& system_new, const BoundaryDiff& diff,
                        const UpdateOptions& opts, UpdateReport* report) {
  UpdateReport local;
  UpdateReport& rep = report ? *report : local;
  rep = UpdateReport{};
  rep.drift = state.drift;
  if (diff.empty() && state.order == system_new.order) return state;

  auto refresh = [&](const std::string& reason) {
    const auto t0 = Clock::now();
    InverseState fresh = refresh_inverse(system_new);
    rep.t_refresh = seconds_since(t0);
    rep.refreshed = true;
    rep.audited = true;
    rep.drift = fresh.drift;
    rep.refresh_reason = reason;
    return fresh;
  };

  try {
    // Removal first, with the removed dofs addressed in place.
    std::unordered_map<ElementId, std::size_t> removed_set;
    for (const auto& id : diff.removed) removed_set.emplace(id, 0);
    std::vector<Eigen::Index> keep;
    std::vector<Eigen::Index> removed;
    std::vector<ElementId> kept_order;
    for (std::size_t e = 0; e < state.order.size(); ++e) {
      auto& target = removed_set.contains(state.order[e]) ? removed : keep;
      for (std::size_t d = 0; d < kDofsPerElement; ++d) {
        target.push_back(static_cast<Eigen::Index>(kDofsPerElement * e + d));
      }
      if (&target == &keep) kept_order.push_back(state.order[e]);
    }
    if (removed.size() != kDofsPerElement * diff.removed.size()) {
      throw Error("diff removes elements that are not in the inverse state");
    }

    const auto m = static_cast<Eigen::Index>(keep.size());
    const auto n = static_cast<Eigen::Index>(system_new.size());
    if (n - m != static_cast<Eigen::Index>(kDofsPerElement * diff.added.size()) ||
        !std::equal(kept_order.begin(), kept_order.end(), system_new.order.begin())) {
      throw Error("new system is not ordered as surviving elements followed by added elements");
    }
    const Eigen::Index k = n - m;

    // Shrink straight into the leading block of the new inverse, then border it.
    InverseState out;
    out.inverse.resize(n, n);
    const auto t_shrink0 = Clock::now();
    shrink_into(state.inverse, keep, removed, out.inverse, opts.counter);
    rep.t_shrink = seconds_since(t_shrink0);

    const auto t_extend0 = Clock::now();
    bool regularized = false;
    if (k > 0) {
      extend_in_place(out.inverse, m, system_new.matrix.topRightCorner(m, k),
                      system_new.matrix.bottomLeftCorner(k, m), system_new.matrix.bottomRightCorner(k, k), opts,
                      &regularized);
    }
    rep.t_extend = seconds_since(t_extend0);
    out.order = system_new.order;
    out.dof_map = make_dof_map(out.order);
    out.regularized = regularized;
    out.drift = state.drift;
    rep.regularized = regularized;

    if (opts.audit) {
      const auto t0 = Clock::now();
      out.drift = inverse_drift(system_new.matrix, out.inverse);
      rep.t_audit = seconds_since(t0);
      rep.audited = true;
      rep.drift = out.drift;
      if (!(out.drift <= opts.drift_tolerance)) {
        std::ostringstream os;
        os << "drift " << out.drift << " exceeds " << opts.drift_tolerance;
        return refresh(os.str());
      }
    }
    return out;
  } catch (const SingularSystem&) {
    throw;
  } catch (const Error& e) {
    return refresh(e.what());
  }
}

Eigen::VectorXd solve_unknowns(const InverseState& state, const BemSystem& system) {
  if (state.size() != system.size()) throw Error("inverse state size does not match the system");
  return state.inverse * system.rhs;
}

BoundarySolution solve(const BemSystem& system, const BoundaryModel& model, const InverseState& state) {
  return make_solution(model, solve_unknowns(state, system));
}

}  // namespace bemtopo
