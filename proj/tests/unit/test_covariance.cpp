#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "npmwf/covariance.hpp"
#include "test_util.hpp"

using namespace npmwf;
using npmwf::testing::Rng;

namespace {

/// x = L w with w white complex Gaussian, so E[x x^H] = L L^H.
CVector correlated_sample(Rng& rng, const CMatrix& l) {
  CVector w(l.dim());
  for (std::size_t i = 0; i < l.dim(); ++i) w[i] = rng.complex_normal() * std::sqrt(0.5);
  return matvec(l, w);
}

double hermitian_defect(const CMatrix& a) { return (a - a.conj_transpose()).max_abs(); }

}  // namespace

TEST_CASE("initial state is epsilon times identity", "[covariance]") {
  const CovarianceState s = init_covariance(2, 3, 1e-6);
  CHECK(s.frame_count == 0);
  REQUIRE(s.phi_ss.size() == 3);
  CHECK(s.phi_ss[1] == CMatrix::scaled_identity(2, 1e-6));
  CHECK(s.phi_nn[2].trace().real() == Catch::Approx(2e-6));
  CHECK_THROWS_AS(init_covariance(2, 3, 0.0), Error);
}

TEST_CASE("recursion boundary cases", "[covariance]") {
  const CVector s{Complex(1.0, 2.0), Complex(-0.5, 0.0)};
  const CVector n{Complex(0.0, 1.0), Complex(3.0, -1.0)};

  SECTION("alpha = 1 replaces the state with the outer product") {
    CovarianceState st = init_covariance(2, 1, 1e-6);
    update_covariance_bin(st, 0, s, n, 1.0, 1.0);
    CHECK(st.phi_ss[0] == herm_outer(s));
    CHECK(st.phi_nn[0] == herm_outer(n));
  }
  SECTION("alpha = 0 leaves the state unchanged") {
    CovarianceState st = init_covariance(2, 1, 1e-6);
    update_covariance_bin(st, 0, s, n, 0.0, 0.0);
    CHECK(st.phi_ss[0] == CMatrix::scaled_identity(2, 1e-6));
    CHECK(st.phi_nn[0] == CMatrix::scaled_identity(2, 1e-6));
  }
  SECTION("scalar hand recursion") {
    CovarianceState st = init_covariance(1, 1, 1.0);
    update_covariance_bin(st, 0, CVector{2.0}, CVector{0.0}, 0.5, 0.5);
    CHECK(st.phi_ss[0](0, 0) == Complex(2.5, 0.0));
    CHECK(st.phi_nn[0](0, 0) == Complex(0.5, 0.0));
  }
}

TEST_CASE("noise recursion tracks the noise estimate", "[covariance]") {
  // Speech and noise statistics must stay separate.
  CovarianceState st = init_covariance(1, 1, 1.0);
  for (int i = 0; i < 50; ++i) update_covariance_bin(st, 0, CVector{10.0}, CVector{1.0}, 0.5, 0.5);
  CHECK(st.phi_ss[0](0, 0).real() == Catch::Approx(100.0).epsilon(1e-9));
  CHECK(st.phi_nn[0](0, 0).real() == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("Hermitian and PSD structure survive 10k random updates", "[covariance][property]") {
  Rng rng(41);
  const std::size_t m = 5;
  CovarianceState st = init_covariance(m, 1, 1e-6);
  for (int t = 0; t < 10000; ++t) {
    const double scale = std::pow(10.0, rng.uniform(-3.0, 3.0));
    CVector s = testing::random_vector(rng, m);
    CVector n = testing::random_vector(rng, m);
    for (std::size_t i = 0; i < m; ++i) {
      s[i] *= scale;
      n[i] *= scale;
    }
    update_covariance_bin(st, 0, s, n, rng.uniform(), rng.uniform());
    for (const CMatrix* phi : {&st.phi_ss[0], &st.phi_nn[0]}) {
      REQUIRE(hermitian_defect(*phi) < 1e-10);
      for (std::size_t i = 0; i < m; ++i) {
        REQUIRE((*phi)(i, i).imag() == 0.0);
        REQUIRE((*phi)(i, i).real() >= 0.0);
      }
    }
    if (t % 500 == 0) {
      for (const CMatrix* phi : {&st.phi_ss[0], &st.phi_nn[0]}) {
        const auto eig = testing::hermitian_eigenvalues(*phi);
        REQUIRE(eig.front() >= -1e-10 * phi->trace().real());
      }
    }
  }
}

TEST_CASE("alpha = 1/t reproduces the running mean", "[covariance]") {
  Rng rng(42);
  const std::size_t m = 4, steps = 300;
  CovarianceState st = init_covariance(m, 1, 1e-6);
  CMatrix sum_ss(m), sum_nn(m);
  for (std::size_t t = 1; t <= steps; ++t) {
    const CVector s = testing::random_vector(rng, m);
    const CVector n = testing::random_vector(rng, m);
    const double a = 1.0 / static_cast<double>(t);
    update_covariance_bin(st, 0, s, n, a, a);
    // Oracle: direct accumulation of outer products, element by element.
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < m; ++c) {
        sum_ss(r, c) += s[r] * std::conj(s[c]);
        sum_nn(r, c) += n[r] * std::conj(n[c]);
      }
  }
  const double inv = 1.0 / static_cast<double>(steps);
  CHECK(testing::max_rel_error(st.phi_ss[0], sum_ss * inv) < 1e-9);
  CHECK(testing::max_rel_error(st.phi_nn[0], sum_nn * inv) < 1e-9);
}

TEST_CASE("fixed smoothing converges to the true covariance", "[covariance]") {
  Rng rng(43);
  const std::size_t m = 5;
  const CMatrix sigma = testing::random_pd(rng, m);
  // Cholesky factor of sigma as the colouring matrix.
  CMatrix l(m);
  for (std::size_t j = 0; j < m; ++j) {
    Complex d = sigma(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * std::conj(l(j, k));
    l(j, j) = std::sqrt(d.real());
    for (std::size_t i = j + 1; i < m; ++i) {
      Complex v = sigma(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * std::conj(l(j, k));
      l(i, j) = v / l(j, j).real();
    }
  }
  REQUIRE(testing::max_rel_error(matmul(l, l.conj_transpose()), sigma) < 1e-12);

  // With a fixed alpha the estimate keeps fluctuating around sigma. For
  // circular Gaussian frames the steady-state error is
  //   E |Phi - sigma|_F^2 = alpha / (2 - alpha) * trace(sigma)^2.
  const double alpha = 0.1;
  const double tr = sigma.trace().real();
  const double predicted = alpha / (2.0 - alpha) * tr * tr;
  const int runs = 400;
  double mse = 0.0;
  CMatrix time_avg(m);
  for (int run = 0; run < runs; ++run) {
    CovarianceState st = init_covariance(m, 1, 1e-6);
    for (int t = 0; t < 2000; ++t) {
      update_covariance_bin(st, 0, CVector(m), correlated_sample(rng, l), 0.0, alpha);
      if (run == 0 && t >= 200) time_avg += st.phi_nn[0] * (1.0 / 1800.0);
    }
    const double e = (st.phi_nn[0] - sigma).frobenius_norm();
    mse += e * e / runs;
  }
  INFO("predicted " << predicted << " measured " << mse);
  CHECK(mse == Catch::Approx(predicted).epsilon(0.10));
  // The estimator is unbiased, so its running time average does reach sigma.
  CHECK((time_avg - sigma).frobenius_norm() / sigma.frobenius_norm() < 0.10);
}

TEST_CASE("frame update checks shapes", "[covariance]") {
  CovarianceState st = init_covariance(3, 4, 1e-6);
  const SpectralFrame s(3, 4), n(3, 4);
  const std::vector<double> a(4, 0.5);
  update_covariance(st, s, n, a, a);
  CHECK(st.frame_count == 1);
  CHECK_THROWS_AS(update_covariance(st, SpectralFrame(2, 4), n, a, a), Error);
  CHECK_THROWS_AS(update_covariance(st, s, n, std::vector<double>(3, 0.5), a), Error);
}
