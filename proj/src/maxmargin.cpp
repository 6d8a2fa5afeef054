#include "groksim/maxmargin.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace groksim {
namespace {

constexpr std::int64_t kDeskScaleCap = 100'000;
constexpr double kFeasTol = 1e-9;  // constraint slack treated as satisfied

// Origin-augmented constraint normals a_i = y_i (x_i, 1); the problem is the
// projection of the origin onto {v : a_i . v >= 1}.
Matrix constraint_normals(const Dataset& ds) {
  const auto n = ds.size();
  Matrix a(n, ds.dim() + 1);
  a.leftCols(ds.dim()) = ds.labels.asDiagonal() * ds.points;
  a.col(ds.dim()) = ds.labels;
  return a;
}

// Dual active-set method (Goldfarb-Idnani with identity Hessian): repeatedly
// pulls in the most violated constraint, taking full primal steps or partial
// dual steps that drop a blocking constraint. Exact in finite steps; the
// working set stays linearly independent, so duals of a degenerate optimal
// face come back mostly zero (refined later).
void dual_active_set(const Matrix& a, Vector& v, std::vector<Eigen::Index>& act,
                     std::vector<double>& alpha_act) {
  const auto n = a.rows();
  const auto m = a.cols();
  v = Vector::Zero(m);
  act.clear();
  alpha_act.clear();
  const std::int64_t max_ops = 200 * n + 10'000;
  std::int64_t ops = 0;
  for (;;) {
    Eigen::Index p = -1;
    double worst = 1.0 - kFeasTol;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mi = a.row(i).dot(v);
      if (mi < worst) {
        worst = mi;
        p = i;
      }
    }
    if (p < 0) return;
    const Vector ap = a.row(p).transpose();
    double alpha_p = 0.0;
    for (;;) {
      if (++ops > max_ops)
        throw NumericError("hard-margin solver: iteration cap; residual " +
                           std::to_string(std::max(0.0, 1.0 - worst)));
      const auto k = static_cast<Eigen::Index>(act.size());
      Vector r(k), z = ap;
      if (k > 0) {
        Matrix na(m, k);
        for (Eigen::Index j = 0; j < k; ++j) na.col(j) = a.row(act[j]).transpose();
        r = na.colPivHouseholderQr().solve(ap);
        z -= na * r;
      }
      const double z2 = z.squaredNorm();
      const bool has_z = z2 > 1e-16 * ap.squaredNorm();
      double t2 = std::numeric_limits<double>::infinity();
      if (has_z) t2 = (1.0 - ap.dot(v)) / z2;
      double t1 = std::numeric_limits<double>::infinity();
      Eigen::Index blocker = -1;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (r[j] > 1e-14) {
          const double t = alpha_act[j] / r[j];
          if (t < t1) {
            t1 = t;
            blocker = j;
          }
        }
      }
      if (!std::isfinite(std::min(t1, t2)))
        throw SeparabilityError("dataset is not linearly separable");
      const double t = std::min(t1, t2);
      if (has_z) v += t * z;
      for (Eigen::Index j = 0; j < k; ++j) alpha_act[j] -= t * r[j];
      alpha_p += t;
      if (t2 <= t1) {
        act.push_back(p);
        alpha_act.push_back(alpha_p);
        break;
      }
      act.erase(act.begin() + blocker);
      alpha_act.erase(alpha_act.begin() + blocker);
    }
  }
}

// Moves the dual certificate to the max-entropy point of the optimal face:
// alpha_i = exp(mu . a_i) with sum alpha_i a_i = v, solved by Newton on the
// smooth convex potential sum_i exp(mu . a_i) - mu . v. Every multiplier comes
// out strictly positive, which the residual-vector system downstream needs.
// Returns false (leaving duals untouched) when v sits on the boundary of the
// support cone and no interior certificate exists.
bool max_entropy_duals(const Matrix& a, const std::vector<Eigen::Index>& support,
                       const Vector& v, std::vector<double>& alphas) {
  const auto k = static_cast<Eigen::Index>(support.size());
  const auto m = a.cols();
  if (k == 0) return false;
  Matrix as(k, m);
  for (Eigen::Index j = 0; j < k; ++j) as.row(j) = a.row(support[j]);

  const double target = std::max(v.norm() / (std::sqrt(static_cast<double>(k)) *
                                             std::max(1.0, as.rowwise().norm().mean())),
                                 1e-300);
  Vector mu = as.completeOrthogonalDecomposition().solve(
      Vector::Constant(k, std::log(target)));

  auto potential = [&](const Vector& u, Vector& al) {
    double phi = -u.dot(v);
    for (Eigen::Index j = 0; j < k; ++j) {
      const double e = std::min(as.row(j).dot(u), 700.0);
      al[j] = std::exp(e);
      phi += al[j];
    }
    return phi;
  };

  // The constraint residual cancels ~sum alpha ||a|| down to ||v||; plain
  // sequential summation leaves noise ~k*eps*sum|alpha a|, which would stall
  // Newton well above tolerance. Accumulate in extended precision.
  auto residual = [&](const Vector& alpha) {
    Eigen::Matrix<long double, Eigen::Dynamic, 1> acc =
        (-v).cast<long double>();
    for (Eigen::Index j = 0; j < k; ++j)
      acc += static_cast<long double>(alpha[j]) * as.row(j).transpose().cast<long double>();
    return Vector(acc.cast<double>());
  };

  Vector al(k);
  potential(mu, al);
  const double gtol = 1e-10 * std::max(1.0, v.norm());
  // Steps shrink below ulp(mu) once the residual is tiny; a stalled point is
  // still a valid certificate when comfortably inside the KKT gate.
  const double stall_tol = 1e-7 * std::max(1.0, v.norm());
  double gnorm = residual(al).norm();
  auto finish = [&](double achieved) {
    if (achieved > stall_tol) return false;
    alphas.assign(al.begin(), al.end());
    return true;
  };
  for (int iter = 0; iter < 300; ++iter) {
    if (gnorm <= gtol) {
      alphas.assign(al.begin(), al.end());
      return true;
    }
    const Vector g = residual(al);
    Matrix h = as.transpose() * al.asDiagonal() * as;
    h.diagonal().array() += 1e-12 * h.diagonal().maxCoeff() + 1e-300;
    const Vector step = h.ldlt().solve(-g);
    // Backtrack on the residual norm itself; the potential in double cannot
    // resolve the final descent.
    double s = 1.0;
    bool moved = false;
    Vector trial_al(k);
    for (int ls = 0; ls < 60; ++ls, s *= 0.5) {
      potential(mu + s * step, trial_al);
      const double trial_gnorm = residual(trial_al).norm();
      if (trial_gnorm < gnorm) {
        mu += s * step;
        al = trial_al;
        gnorm = trial_gnorm;
        moved = true;
        break;
      }
    }
    if (!moved) return finish(gnorm);
  }
  return finish(gnorm);
}

SvmSolution finalize(const Dataset& ds, const Matrix& a, const Vector& v,
                     const std::map<Eigen::Index, double>& basis_duals) {
  SvmSolution sol;
  const auto d = ds.dim();
  sol.w_svm = v.head(d);
  sol.b_svm = v[d];
  const Vector margins = a * v;
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    if (std::abs(margins[i] - 1.0) <= kActivityTol) sol.support_indices.push_back(i);
  std::vector<double> duals(sol.support_indices.size(), 0.0);
  for (std::size_t j = 0; j < sol.support_indices.size(); ++j) {
    auto it = basis_duals.find(sol.support_indices[j]);
    if (it != basis_duals.end()) duals[j] = std::max(0.0, it->second);
  }
  std::vector<Eigen::Index> sup(sol.support_indices.begin(), sol.support_indices.end());
  max_entropy_duals(a, sup, v, duals);
  sol.duals = std::move(duals);
  for (auto i : sol.support_indices)
    (ds.labels[i] > 0 ? sol.support_pos : sol.support_neg).push_back(i);
  if (sol.support_indices.empty())
    throw NumericError("hard-margin solver: empty support set");
  return sol;
}

}  // namespace

SvmSolution solve_hard_margin(const Dataset& ds) {
  if (ds.size() == 0) throw SpecError("solve_hard_margin: empty dataset");
  if (ds.size() > kDeskScaleCap) throw SpecError("solve_hard_margin: beyond desk-scale cap");
  const Matrix a = constraint_normals(ds);
  Vector v;
  std::vector<Eigen::Index> act;
  std::vector<double> alpha_act;
  dual_active_set(a, v, act, alpha_act);
  std::map<Eigen::Index, double> basis;
  for (std::size_t j = 0; j < act.size(); ++j) basis[act[j]] = alpha_act[j];
  return finalize(ds, a, v, basis);
}

SvmSolution brute_force_hard_margin(const Dataset& ds) {
  const auto n = ds.size();
  const auto d = ds.dim();
  if (n == 0) throw SpecError("brute_force_hard_margin: empty dataset");
  if (n > 16) throw SpecError("brute_force_hard_margin: only for tiny N");
  const Matrix a = constraint_normals(ds);
  const auto m = d + 1;

  double best = std::numeric_limits<double>::infinity();
  Vector best_v;
  std::vector<Eigen::Index> best_subset;
  Vector best_alpha;

  std::vector<Eigen::Index> subset;
  auto consider = [&]() {
    const auto k = static_cast<Eigen::Index>(subset.size());
    Matrix ns(k, m);
    for (Eigen::Index j = 0; j < k; ++j) ns.row(j) = a.row(subset[j]);
    auto cod = ns.completeOrthogonalDecomposition();
    const Vector v = cod.solve(Vector::Ones(k));  // min-norm with unit margins
    if ((ns * v - Vector::Ones(k)).cwiseAbs().maxCoeff() > kFeasTol) return;
    const Vector alpha = ns.transpose().completeOrthogonalDecomposition().solve(v);
    if ((ns.transpose() * alpha - v).norm() > kFeasTol * std::max(1.0, v.norm())) return;
    if (alpha.minCoeff() < -kFeasTol) return;
    if ((a * v).minCoeff() < 1.0 - kFeasTol) return;
    const double obj = v.squaredNorm();
    if (obj < best) {
      best = obj;
      best_v = v;
      best_subset = subset;
      best_alpha = alpha;
    }
  };
  const auto max_k = std::min<Eigen::Index>(m, n);
  auto rec = [&](auto&& self, Eigen::Index next) -> void {
    if (!subset.empty()) consider();
    if (static_cast<Eigen::Index>(subset.size()) == max_k) return;
    for (Eigen::Index i = next; i < n; ++i) {
      subset.push_back(i);
      self(self, i + 1);
      subset.pop_back();
    }
  };
  rec(rec, 0);
  if (!best_v.size()) throw SeparabilityError("dataset is not linearly separable");
  std::map<Eigen::Index, double> basis;
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(best_subset.size()); ++j)
    basis[best_subset[j]] = best_alpha[j];
  return finalize(ds, a, best_v, basis);
}

Vector compute_w_tilde(SvmSolution& sol, const Dataset& ds, double eta) {
  if (!(eta > 0)) throw SpecError("compute_w_tilde: eta must be > 0");
  const auto k = static_cast<Eigen::Index>(sol.support_indices.size());
  if (k == 0) throw SpecError("compute_w_tilde: empty support set");
  for (double alpha : sol.duals)
    if (!(alpha > 0)) throw NumericError("compute_w_tilde: degenerate dual (alpha_i = 0)");
  Matrix m(k, ds.dim());
  Vector rhs(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto i = sol.support_indices[j];
    m.row(j) = ds.labels[i] * ds.points.row(i);
    rhs[j] = -std::log(sol.duals[j] / eta);
  }
  const Vector wt = m.completeOrthogonalDecomposition().solve(rhs);
  sol.w_tilde = wt;
  sol.w_tilde_residual = (m * wt - rhs).cwiseAbs().maxCoeff();
  sol.span_violation = sol.w_tilde_residual > 1e-6;

  if (sol.support_pos.empty() || sol.support_neg.empty())
    throw NumericError("compute_w_tilde: one-sided support set, delta undefined");
  double ap = 0.0, am = 0.0;
  for (auto i : sol.support_pos) ap += std::exp(-wt.dot(ds.points.row(i)));
  for (auto i : sol.support_neg) am += std::exp(+wt.dot(ds.points.row(i)));
  sol.A_plus = ap;
  sol.A_minus = am;
  sol.delta = std::sqrt(am / ap);
  sol.b_inf = -std::log(sol.delta);
  return wt;
}

SupportAsymmetry support_asymmetry(const SvmSolution& sol) {
  if (!sol.w_tilde) throw SpecError("support_asymmetry: w_tilde not computed");
  if (sol.support_pos.empty() || sol.support_neg.empty())
    throw NumericError("support_asymmetry: one-sided support set, delta undefined");
  return {sol.A_plus, sol.A_minus, sol.delta, sol.b_inf};
}

KktReport kkt_report(const SvmSolution& sol, const Dataset& ds) {
  KktReport rep;
  const Matrix a = constraint_normals(ds);
  Vector v(ds.dim() + 1);
  v.head(ds.dim()) = sol.w_svm;
  v[ds.dim()] = sol.b_svm;
  const Vector margins = a * v;
  rep.max_primal_violation = std::max(0.0, 1.0 - margins.minCoeff());
  rep.min_dual = sol.duals.empty()
                     ? 0.0
                     : *std::min_element(sol.duals.begin(), sol.duals.end());
  Eigen::Matrix<long double, Eigen::Dynamic, 1> station = v.cast<long double>();
  double alpha_sum = 0.0;
  double comp = 0.0;
  for (std::size_t j = 0; j < sol.support_indices.size(); ++j) {
    const auto i = sol.support_indices[j];
    station -= static_cast<long double>(sol.duals[j]) * a.row(i).transpose().cast<long double>();
    alpha_sum += sol.duals[j];
    comp = std::max(comp, std::abs(sol.duals[j] * (margins[i] - 1.0)));
  }
  rep.stationarity_residual =
      static_cast<double>(station.norm()) / std::max(1.0, v.norm());
  rep.max_complementarity = comp / std::max(1.0, alpha_sum);
  return rep;
}

void to_json(nlohmann::json& j, const SvmSolution& sol) {
  j = nlohmann::json{
      {"w_svm", std::vector<double>(sol.w_svm.begin(), sol.w_svm.end())},
      {"b_svm", sol.b_svm},
      {"support_indices", sol.support_indices},
      {"duals", sol.duals},
      {"support_pos", sol.support_pos},
      {"support_neg", sol.support_neg},
      {"w_tilde_residual", sol.w_tilde_residual},
      {"span_violation", sol.span_violation},
      {"A_plus", sol.A_plus},
      {"A_minus", sol.A_minus},
      {"delta", sol.delta},
      {"b_inf", sol.b_inf},
  };
  if (sol.w_tilde)
    j["w_tilde"] = std::vector<double>(sol.w_tilde->begin(), sol.w_tilde->end());
}

void from_json(const nlohmann::json& j, SvmSolution& sol) {
  sol = SvmSolution{};
  auto w = j.at("w_svm").get<std::vector<double>>();
  sol.w_svm = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
  sol.b_svm = j.at("b_svm").get<double>();
  sol.support_indices = j.at("support_indices").get<std::vector<std::int64_t>>();
  sol.duals = j.at("duals").get<std::vector<double>>();
  sol.support_pos = j.at("support_pos").get<std::vector<std::int64_t>>();
  sol.support_neg = j.at("support_neg").get<std::vector<std::int64_t>>();
  sol.w_tilde_residual = j.at("w_tilde_residual").get<double>();
  sol.span_violation = j.at("span_violation").get<bool>();
  sol.A_plus = j.at("A_plus").get<double>();
  sol.A_minus = j.at("A_minus").get<double>();
  sol.delta = j.at("delta").get<double>();
  sol.b_inf = j.at("b_inf").get<double>();
  if (j.contains("w_tilde")) {
    auto wt = j["w_tilde"].get<std::vector<double>>();
    sol.w_tilde = Eigen::Map<const Vector>(wt.data(), static_cast<Eigen::Index>(wt.size()));
  }
}

}  // namespace groksim
