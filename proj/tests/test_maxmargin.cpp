#include "groksim/datagen.hpp"
#include "groksim/maxmargin.hpp"
#include "groksim/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace groksim;

namespace {

Dataset make_dataset(const Matrix& x, const Vector& y, double gamma = 1.0) {
  Dataset ds;
  ds.points = x;
  ds.labels = y;
  ds.spec.kind = DatasetKind::Standard;
  ds.spec.gamma = gamma;
  ds.spec.n_pos = (y.array() > 0).count();
  ds.spec.n_neg = y.size() - ds.spec.n_pos;
  ds.radius_bound = x.rows() > 0 ? x.rowwise().norm().maxCoeff() : 0.0;
  return ds;
}

Dataset random_separable(Xoshiro256pp& rng, int n, int d) {
  // Points on both sides of a random hyperplane with a guaranteed gap.
  Vector w(d);
  for (int k = 0; k < d; ++k) w[k] = rng.uniform(-1.0, 1.0);
  if (w.norm() < 1e-3) w[0] = 1.0;
  w.normalize();
  Matrix x(n, d);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    Vector p(d);
    for (int k = 0; k < d; ++k) p[k] = rng.uniform(-3.0, 3.0);
    const double side = i % 2 == 0 ? 1.0 : -1.0;
    p += (side * 0.5 - w.dot(p)) * w;  // place at signed distance 0.5
    for (int k = 0; k < d; ++k) p[k] += 0.2 * rng.uniform(0.0, 1.0) * side * w[k];
    x.row(i) = p;
    y[i] = side;
  }
  return make_dataset(x, y);
}

}  // namespace

TEST_CASE("two symmetric 1D points: closed-form solution") {
  Matrix x(2, 1);
  x << 1.0, -1.0;
  Vector y(2);
  y << 1.0, -1.0;
  auto sol = solve_hard_margin(make_dataset(x, y));
  CHECK(sol.w_svm[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sol.b_svm == doctest::Approx(0.0).epsilon(1e-12));
  REQUIRE(sol.support_indices == std::vector<std::int64_t>{0, 1});
  CHECK(sol.duals[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(sol.duals[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("active-set solver equals brute-force enumeration on random instances") {
  Xoshiro256pp rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 2 + static_cast<int>(rng.next() % 2);  // 2 or 3
    const int n = 4 + static_cast<int>(rng.next() % 5);  // 4..8
    const Dataset ds = random_separable(rng, n, d);
    const auto fast = solve_hard_margin(ds);
    const auto ref = brute_force_hard_margin(ds);
    CHECK((fast.w_svm - ref.w_svm).norm() <= 1e-5 * std::max(1.0, ref.w_svm.norm()));
    CHECK(std::abs(fast.b_svm - ref.b_svm) <= 1e-5 * std::max(1.0, std::abs(ref.b_svm)));
    CHECK(fast.support_indices == ref.support_indices);
  }
}

TEST_CASE("KKT certificate holds on generated data") {
  DatasetSpec spec;
  spec.kind = DatasetKind::Standard;
  spec.gamma = 1e-3;
  spec.w_true = Vector(2);
  spec.w_true << 0.7071067811865476, 0.7071067811865476;
  spec.n_pos = 1000;
  spec.n_neg = 1000;
  spec.seed = 6;
  const auto ds = gen_standard(spec);
  const auto sol = solve_hard_margin(ds);
  CHECK(kkt_report(sol, ds).pass(1e-6));
  // Origin separation: with both class bands densely sampled the closest
  // margins nearly balance, so the optimal offset is tiny against ||w||.
  CHECK(std::abs(sol.b_svm) <= 1e-3 * sol.w_svm.norm());
}

TEST_CASE("feature scaling inverts w and keeps the support set") {
  Xoshiro256pp rng(31);
  const Dataset ds = random_separable(rng, 8, 2);
  Dataset scaled = ds;
  scaled.points *= 2.0;
  scaled.radius_bound *= 2.0;
  const auto a = solve_hard_margin(ds);
  const auto b = solve_hard_margin(scaled);
  CHECK((b.w_svm - a.w_svm / 2.0).norm() <= 1e-8 * a.w_svm.norm());
  CHECK(a.support_indices == b.support_indices);
}

TEST_CASE("planted supports are recovered exactly with positive duals") {
  DatasetSpec spec;
  spec.kind = DatasetKind::Planted;
  spec.gamma = 1e-3;
  spec.w_true = Vector(2);
  spec.w_true << 0.7071067811865476, 0.7071067811865476;
  spec.n_pos = 60;
  spec.n_neg = 60;
  spec.s_pos = 10;
  spec.s_neg = 14;
  spec.seed = 8;
  const auto ds = gen_planted(spec);
  auto sol = solve_hard_margin(ds);
  std::vector<std::int64_t> expect(24);
  for (int i = 0; i < 24; ++i) expect[i] = i;
  CHECK(sol.support_indices == expect);
  CHECK(kkt_report(sol, ds).pass(1e-6));
  for (double a : sol.duals) CHECK(a > 0.0);
  // Every planted point achieves margin 1 after solving.
  for (auto i : sol.support_indices) {
    const double m = ds.labels[i] * (sol.w_svm.dot(ds.points.row(i)) + sol.b_svm);
    CHECK(m == doctest::Approx(1.0).epsilon(1e-6));
  }
  compute_w_tilde(sol, ds, 0.01);
  CHECK(sol.b_inf == doctest::Approx(0.5 * std::log(10.0 / 14.0)).epsilon(0.12));
}

TEST_CASE("w_tilde back-substitutes into the defining relation (k=2, d=2)") {
  Matrix x(2, 2);
  x << 1.3, 0.4, -0.9, 0.7;
  Vector y(2);
  y << 1.0, -1.0;
  const Dataset ds = make_dataset(x, y);
  auto sol = solve_hard_margin(ds);
  REQUIRE(sol.support_indices.size() == 2);
  const double eta = 0.01;
  const Vector wt = compute_w_tilde(sol, ds, eta);
  CHECK_FALSE(sol.span_violation);
  for (std::size_t j = 0; j < 2; ++j) {
    const auto i = sol.support_indices[j];
    const double lhs = eta * std::exp(-(ds.labels[i] * ds.points.row(i)).dot(wt));
    CHECK(std::abs(lhs - sol.duals[j]) <= 1e-10 * sol.duals[j]);
  }
}

TEST_CASE("single support vector with alpha = eta gives w_tilde = 0") {
  // One point per class, mirror symmetric, scaled so duals land at eta.
  Matrix x(2, 1);
  x << 1.0, -1.0;
  Vector y(2);
  y << 1.0, -1.0;
  Dataset ds = make_dataset(x, y);
  auto sol = solve_hard_margin(ds);
  const double eta = sol.duals[0];  // force log(alpha/eta) = 0
  const Vector wt = compute_w_tilde(sol, ds, eta);
  CHECK(wt.norm() <= 1e-12);
  CHECK(sol.delta == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sol.b_inf == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("mirror-symmetric planting forces delta = 1") {
  // S(1,1) with x- = -x+ and symmetric population.
  Matrix x(4, 2);
  x << 1.0, 0.5, -1.0, -0.5, 2.0, 2.0, -2.0, -2.0;
  Vector y(4);
  y << 1.0, -1.0, 1.0, -1.0;
  auto ds = make_dataset(x, y);
  auto sol = solve_hard_margin(ds);
  compute_w_tilde(sol, ds, 0.01);
  CHECK(sol.delta == doctest::Approx(1.0).epsilon(1e-9));
  const auto asym = support_asymmetry(sol);
  CHECK(asym.A_plus == doctest::Approx(asym.A_minus).epsilon(1e-9));
  CHECK(asym.b_inf == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("support_asymmetry arithmetic identities") {
  SvmSolution sol;
  sol.w_tilde = Vector::Zero(1);
  sol.support_pos = {0};
  sol.support_neg = {1};
  sol.A_plus = std::exp(2.0);
  sol.A_minus = 1.0;
  sol.delta = std::sqrt(sol.A_minus / sol.A_plus);
  sol.b_inf = -std::log(sol.delta);
  const auto a = support_asymmetry(sol);
  CHECK(a.delta == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(a.b_inf == doctest::Approx(1.0).epsilon(1e-15));
  // Reference instance: delta = 1.1107 corresponds to b_inf = -0.105.
  CHECK(-std::log(1.1107) == doctest::Approx(-0.105).epsilon(0.002));
}

TEST_CASE("one-sided datasets are rejected as non-separable or one-sided") {
  Matrix x(2, 1);
  x << 1.0, 2.0;
  Vector y(2);
  y << 1.0, 1.0;
  auto ds = make_dataset(x, y);
  auto sol = solve_hard_margin(ds);  // separable (all one class, w pushes positive)
  CHECK_THROWS_AS(compute_w_tilde(sol, ds, 0.01), NumericError);

  // Truly non-separable: identical point with both labels.
  Matrix x2(2, 1);
  x2 << 1.0, 1.0;
  Vector y2(2);
  y2 << 1.0, -1.0;
  CHECK_THROWS_AS(solve_hard_margin(make_dataset(x2, y2)), SeparabilityError);
}

TEST_CASE("degenerate duals are reported, not silently used") {
  SvmSolution sol;
  sol.w_svm = Vector::Ones(1);
  sol.support_indices = {0, 1};
  sol.duals = {0.5, 0.0};
  sol.support_pos = {0};
  sol.support_neg = {1};
  Matrix x(2, 1);
  x << 1.0, -1.0;
  Vector y(2);
  y << 1.0, -1.0;
  const Dataset ds = make_dataset(x, y);
  CHECK_THROWS_AS(compute_w_tilde(sol, ds, 0.01), NumericError);
}
