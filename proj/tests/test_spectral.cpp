#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <random>

#include "rtldp/spectral.hpp"
#include "test_util.hpp"

using namespace rtldp;

namespace {

CsrMatrix dense_to_csr(const Eigen::MatrixXd& m) {
  CsrMatrix out;
  out.n = static_cast<int>(m.rows());
  out.ptr.assign(out.n + 1, 0);
  for (int i = 0; i < out.n; ++i) {
    out.ptr[i + 1] = out.ptr[i];
    for (int j = 0; j < out.n; ++j) {
      if (m(i, j) != 0.0) {
        out.col.push_back(j);
        out.val.push_back(m(i, j));
        ++out.ptr[i + 1];
      }
    }
  }
  return out;
}

double eigen_spectral_radius(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  double rho = 0.0;
  for (int i = 0; i < m.rows(); ++i) rho = std::max(rho, std::abs(solver.eigenvalues()[i]));
  return rho;
}

}  // namespace

TEST_CASE("power iteration against a dense eigensolver") {
  std::mt19937_64 gen(2718);
  std::uniform_real_distribution<double> wd(0.1, 3.0);
  std::bernoulli_distribution edge(0.5);

  SECTION("random sparse nonnegative matrices") {
    for (int trial = 0; trial < 60; ++trial) {
      int n = 2 + static_cast<int>(gen() % 9);
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
      bool any = false;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (edge(gen)) {
            m(i, j) = wd(gen);
            any = true;
          }
      if (!any) continue;
      double expect = eigen_spectral_radius(m);
      double got = spectral_radius(dense_to_csr(m));
      CHECK_THAT(got, Catch::Matchers::WithinAbs(expect, 1e-10 * std::max(1.0, expect)));
    }
  }

  SECTION("periodic cycles with weights") {
    // A weighted k-cycle has spectral radius (product of weights)^{1/k} and
    // defeats unshifted power iteration.
    for (int k : {2, 3, 5, 8}) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
      double prod = 1.0;
      for (int i = 0; i < k; ++i) {
        double w = wd(gen);
        m(i, (i + 1) % k) = w;
        prod *= w;
      }
      double expect = std::pow(prod, 1.0 / k);
      CHECK_THAT(spectral_radius(dense_to_csr(m)),
                 Catch::Matchers::WithinAbs(expect, 1e-12 * std::max(1.0, expect)));
    }
  }

  SECTION("reducible block-triangular matrices take the component maximum") {
    for (int trial = 0; trial < 20; ++trial) {
      int n1 = 2 + static_cast<int>(gen() % 3), n2 = 2 + static_cast<int>(gen() % 3);
      int n = n1 + n2;
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n1; ++j) m(i, j) = wd(gen);
      for (int i = 0; i < n2; ++i)
        for (int j = 0; j < n2; ++j) m(n1 + i, n1 + j) = wd(gen);
      for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
          if (edge(gen)) m(i, n1 + j) = wd(gen);  // one-way coupling
      double expect = eigen_spectral_radius(m);
      CHECK_THAT(spectral_radius(dense_to_csr(m)),
                 Catch::Matchers::WithinAbs(expect, 1e-10 * std::max(1.0, expect)));
    }
  }

  SECTION("acyclic matrices have radius zero") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
    m(0, 1) = 2.0;
    m(1, 2) = 3.0;
    m(2, 3) = 5.0;
    CHECK(spectral_radius(dense_to_csr(m)) == 0.0);
    PerronData pd = perron(dense_to_csr(m));
    CHECK(pd.eigenvalue == 0.0);
  }

  SECTION("perron vectors satisfy their eigen equations") {
    for (int trial = 0; trial < 20; ++trial) {
      Sft s = testutil::random_sft(gen, 4);
      int n = s.alphabet_size();
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (s.allows(i, j)) m(i, j) = wd(gen);
      CsrMatrix csr = dense_to_csr(m);
      PerronData pd = perron(csr);
      CHECK_THAT(pd.eigenvalue,
                 Catch::Matchers::WithinAbs(eigen_spectral_radius(m),
                                            1e-10 * std::max(1.0, pd.eigenvalue)));
      CHECK(pd.residual <= 1e-12);
      double dot = 0.0;
      for (int i = 0; i < n; ++i) {
        CHECK(pd.right[i] > 0.0);
        CHECK(pd.left[i] > 0.0);
        dot += pd.left[i] * pd.right[i];
      }
      CHECK_THAT(dot, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
  }

  SECTION("tied dominant components are flagged") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
    m(0, 1) = m(1, 0) = 1.0;  // component A, radius 1
    m(2, 3) = m(3, 2) = 1.0;  // component B, radius 1
    CHECK(perron(dense_to_csr(m)).multiple_dominant);
  }
}
