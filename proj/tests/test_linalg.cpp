// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "aesfem/assembly.hpp"
#include "aesfem/delaunay.hpp"
#include "aesfem/linalg/condest.hpp"
#include "aesfem/linalg/krylov.hpp"
#include "aesfem/linalg/preconditioners.hpp"
#include "support.hpp"

using namespace aesfem;
using namespace aesfem::linalg;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double rel_diff(const std::vector<double>& x, const Eigen::VectorXd& y) { return (test::to_eigen(x) - y).norm() / y.norm(); }

SparseRowMatrix tridiag(int n, double lo, double d, double up) {
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i) {
    t.push_back({i, i, d});
    if (i > 0) t.push_back({i, i - 1, lo});
    if (i + 1 < n) t.push_back({i, i + 1, up});
  }
  return SparseRowMatrix::from_triplets(static_cast<std::size_t>(n), static_cast<std::size_t>(n), std::move(t));
}

SparseRowMatrix fem_matrix(std::size_t nodes) {
  const auto m = mesh::generate_unstructured_mesh(nodes, 17);
  return assemble_linear_fem(m, analytic_solution(SolutionId::U1, 2)).matrix;
}

std::vector<double> ones(std::size_t n) { return std::vector<double>(n, 1.0); }

}  // namespace

TEST_CASE("sparse matrix basics", "[linalg][sparse]") {
  const auto a = SparseRowMatrix::from_triplets(2, 3, {{1, 2, 4.0}, {0, 1, 1.0}, {0, 1, 2.0}, {1, 0, -1.0}});
  REQUIRE(a.nnz() == 3);
  REQUIRE(a.coeff(0, 1) == 3.0);
  REQUIRE(a.coeff(1, 1) == 0.0);
  const auto y = a * std::vector<double>{1, 2, 3};
  REQUIRE(y == std::vector<double>{6.0, 11.0});
  const auto at = a.transpose();
  REQUIRE(at.rows() == 3);
  REQUIRE(at.coeff(2, 1) == 4.0);
  REQUIRE(a.norm1() == 4.0);
  REQUIRE(SparseRowMatrix::identity(3).diagonal() == ones(3));
  REQUIRE_THROWS_AS(SparseRowMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), LinalgError);
  REQUIRE_THROWS_WITH(SparseRowMatrix::from_csr(2, 2, {0, 2, 1}, {0, 1, 0}, {1, 1, 1}), ContainsSubstring("inconsistent") || ContainsSubstring("monotone"));
  REQUIRE_THROWS_WITH(SparseRowMatrix::from_csr(1, 2, {0, 2}, {1, 0}, {1, 1}), ContainsSubstring("ascending"));
  REQUIRE_THROWS_WITH(SparseRowMatrix::from_csr(1, 2, {0, 1}, {2}, {1}), ContainsSubstring("out of range"));
}

TEST_CASE("GMRES", "[linalg][gmres]") {
  const IdentityPreconditioner id;
  SECTION("identity converges immediately") {
    const auto r = gmres(SparseRowMatrix::identity(5), std::vector<double>{1, 2, 3, 4, 5}, id, {1e-12, 50});
    REQUIRE(r.report.converged);
    REQUIRE(r.report.iterations <= 1);
    REQUIRE(r.x == std::vector<double>{1, 2, 3, 4, 5});
  }
  SECTION("diagonal system with k distinct values takes at most k steps") {
    std::vector<Triplet> t;
    for (int i = 0; i < 12; ++i) t.push_back({i, i, 1.0 + (i % 4)});
    const auto a = SparseRowMatrix::from_triplets(12, 12, t);
    const auto r = gmres(a, ones(12), id, {1e-12, 50});
    REQUIRE(r.report.converged);
    REQUIRE(r.report.iterations <= 4);
    for (int i = 0; i < 12; ++i) REQUIRE_THAT(r.x[i], WithinRel(1.0 / (1.0 + (i % 4)), 1e-10));
  }
  SECTION("random nonsymmetric systems match dense LU with monotone residuals") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
      const auto d = test::random_sparse_dominant(60, 0.1, rng);
      const auto a = test::from_dense(d);
      Eigen::VectorXd b = Eigen::VectorXd::Random(60);
      const std::vector<double> bv(b.data(), b.data() + 60);
      const auto r = gmres(a, bv, id, {1e-12, 200});
      REQUIRE(r.report.converged);
      REQUIRE(rel_diff(r.x, d.partialPivLu().solve(b)) < 1e-9);
      const auto& h = r.report.residual_history;
      REQUIRE(h.size() == static_cast<std::size_t>(r.report.iterations) + 1);
      for (std::size_t k = 1; k < h.size(); ++k) REQUIRE(h[k] <= h[k - 1] * (1 + 1e-12));
    }
  }
  SECTION("zero right-hand side and size checks") {
    const auto r = gmres(SparseRowMatrix::identity(3), std::vector<double>(3, 0.0), id);
    REQUIRE(r.report.converged);
    REQUIRE(r.x == std::vector<double>(3, 0.0));
    REQUIRE_THROWS_AS(gmres(SparseRowMatrix::identity(3), ones(2), id), LinalgError);
  }
  SECTION("restart still converges") {
    const auto a = tridiag(80, -1.0, 2.5, -1.2);
    KrylovOptions opt{1e-10, 2000, 10};
    const auto r = gmres(a, ones(80), id, opt);
    REQUIRE(r.report.converged);
    REQUIRE(rel_diff(r.x, test::to_dense(a).partialPivLu().solve(Eigen::VectorXd::Ones(80))) < 1e-8);
  }
}

TEST_CASE("conjugate gradients", "[linalg][cg]") {
  const IdentityPreconditioner id;
  REQUIRE(cg(SparseRowMatrix::identity(4), ones(4), id).report.iterations <= 1);
  std::vector<Triplet> t;
  for (int i = 0; i < 9; ++i) t.push_back({i, i, 1.0 + (i % 3)});
  const auto r = cg(SparseRowMatrix::from_triplets(9, 9, t), ones(9), id, {1e-12, 50});
  REQUIRE(r.report.converged);
  REQUIRE(r.report.iterations <= 3);

  const auto a = fem_matrix(400);
  const auto b = ones(a.rows());
  const auto s = cg(a, b, id, {1e-12, 2000});
  REQUIRE(s.report.converged);
  const Eigen::VectorXd ref = test::to_dense(a).llt().solve(test::to_eigen(b));
  REQUIRE(rel_diff(s.x, ref) < 1e-9);

  const auto indefinite = SparseRowMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, -1.0}});
  REQUIRE_THROWS_WITH(cg(indefinite, std::vector<double>{0.0, 1.0}, id), ContainsSubstring("not SPD"));
}

TEST_CASE("threshold ILU", "[linalg][ilu]") {
  std::mt19937_64 rng(5);
  const auto d = test::random_sparse_dominant(50, 0.15, rng);
  const auto a = test::from_dense(d);
  SECTION("zero drop tolerance gives the exact LU factors") {
    const IlutPreconditioner p(a, 0.0);
    Eigen::MatrixXd l = test::to_dense(p.lower()) + Eigen::MatrixXd::Identity(50, 50);
    Eigen::MatrixXd u = test::to_dense(p.upper());
    REQUIRE((l * u - d).cwiseAbs().maxCoeff() < 1e-12 * d.cwiseAbs().maxCoeff());
    const auto r = gmres(a, ones(50), p, {1e-12, 20});
    REQUIRE(r.report.iterations <= 1);
  }
  SECTION("diagonal matrices factor trivially") {
    const auto diag = SparseRowMatrix::from_triplets(3, 3, {{0, 0, 2.0}, {1, 1, 3.0}, {2, 2, 4.0}});
    const IlutPreconditioner p(diag, 1e-3);
    REQUIRE(p.lower().nnz() == 0);
    REQUIRE(p.upper() == diag);
  }
  SECTION("dropping reduces fill and still helps") {
    const auto f = fem_matrix(1500);
    const IlutPreconditioner exact(f, 0.0), loose(f, 1e-2);
    REQUIRE(loose.fill() < exact.fill());
    const IdentityPreconditioner id;
    const auto plain = gmres(f, ones(f.rows()), id, {1e-10, 2000});
    const auto pre = gmres(f, ones(f.rows()), loose, {1e-10, 2000});
    REQUIRE(pre.report.converged);
    REQUIRE(pre.report.iterations < plain.report.iterations);
  }
  SECTION("zero pivot is reported") {
    const auto z = SparseRowMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}});
    REQUIRE_THROWS_WITH(IlutPreconditioner(z, 0.0), ContainsSubstring("zero pivot"));
  }
}

TEST_CASE("Gauss-Seidel preconditioner", "[linalg][gs]") {
  const IdentityPreconditioner id;
  const auto diag = SparseRowMatrix::from_triplets(3, 3, {{0, 0, 2.0}, {1, 1, 4.0}, {2, 2, 8.0}});
  const GaussSeidelPreconditioner gd(diag);
  std::vector<double> z(3);
  gd.apply(std::vector<double>{2, 4, 8}, z);
  REQUIRE(z == ones(3));

  const auto lower = SparseRowMatrix::from_triplets(3, 3, {{0, 0, 2.0}, {1, 0, 1.0}, {1, 1, 3.0}, {2, 1, -1.0}, {2, 2, 1.0}});
  REQUIRE(gmres(lower, ones(3), GaussSeidelPreconditioner(lower), {1e-12, 10}).report.iterations <= 1);

  // Strong subdiagonal coupling (upwinded convection) is mostly captured by the sweep.
  const auto t = tridiag(100, -2.0, 2.5, -0.4);
  const auto plain = gmres(t, ones(100), id, {1e-10, 1000});
  const auto pre = gmres(t, ones(100), GaussSeidelPreconditioner(t), {1e-10, 1000});
  REQUIRE(pre.report.converged);
  REQUIRE(pre.report.iterations < plain.report.iterations);

  const auto bad = SparseRowMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 1, 1.0}});
  REQUIRE_THROWS_WITH(GaussSeidelPreconditioner(bad), ContainsSubstring("zero diagonal"));
}

TEST_CASE("incomplete Cholesky", "[linalg][ic]") {
  const auto diag = SparseRowMatrix::from_triplets(2, 2, {{0, 0, 4.0}, {1, 1, 9.0}});
  const IncompleteCholeskyPreconditioner pd(diag, 1e-3);
  REQUIRE_THAT(pd.factor().coeff(0, 0), WithinAbs(2.0, 1e-15));
  REQUIRE_THAT(pd.factor().coeff(1, 1), WithinAbs(3.0, 1e-15));

  const auto a = fem_matrix(500);
  const IncompleteCholeskyPreconditioner exact(a, 0.0);
  const Eigen::MatrixXd r = test::to_dense(exact.factor());
  const Eigen::MatrixXd d = test::to_dense(a);
  REQUIRE((r.transpose() * r - d).cwiseAbs().maxCoeff() < 1e-12 * d.cwiseAbs().maxCoeff());

  const IdentityPreconditioner id;
  const auto plain = cg(a, ones(a.rows()), id, {1e-10, 2000});
  const auto pre = cg(a, ones(a.rows()), IncompleteCholeskyPreconditioner(a, 1e-3), {1e-10, 2000});
  REQUIRE(pre.report.converged);
  REQUIRE(pre.report.iterations < plain.report.iterations);

  const auto indefinite = SparseRowMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, -2.0}});
  REQUIRE_THROWS_WITH(IncompleteCholeskyPreconditioner(indefinite, 0.0), ContainsSubstring("nonpositive pivot"));
}

TEST_CASE("1-norm condition estimate", "[linalg][condest]") {
  REQUIRE_THAT(condest_1norm(SparseRowMatrix::identity(7)), WithinAbs(1.0, 1e-14));
  REQUIRE_THAT(condest_1norm(SparseRowMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, 10.0}})), WithinRel(10.0, 1e-14));
  const auto singular = SparseRowMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}});
  REQUIRE(std::isinf(condest_1norm(singular)));

  std::mt19937_64 rng(77);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd d(30, 30);
    for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = g(rng);
    const double kappa = test::exact_kappa1(d);
    const double est = condest_1norm(test::from_dense(d));
    REQUIRE(est <= kappa * (1 + 1e-10));
    REQUIRE(est >= kappa / 10.0);
    // ||A||_1 / min_j ||a_j||_1 is a valid lower bound.
    REQUIRE(est >= test::norm1(d) / d.cwiseAbs().colwise().sum().minCoeff() * (1 - 1e-12));
  }
  const auto f = fem_matrix(300);
  const double exact = test::exact_kappa1(test::to_dense(f));
  const double est = condest_1norm(f);
  REQUIRE(est <= exact * (1 + 1e-10));
  REQUIRE(est >= exact / 3.0);
}
