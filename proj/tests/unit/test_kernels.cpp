#include <doctest.h>

#include <cmath>

#include "kernels/kernels.hpp"
#include "test_util.hpp"

using namespace amc;

namespace {

// Naive triple loop in i-j-t order: same per-element accumulation order as
// the kernels, so results must match bit-for-bit.
std::vector<double> naive_gemm(const std::vector<double>& a,
                               const std::vector<double>& b, std::size_t m,
                               std::size_t k, std::size_t n) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) {
        s = s + a[i * k + t] * b[t * n + j];
      }
      c[i * n + j] = s;
    }
  }
  return c;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("gemm_nn matches the naive triple loop bitwise") {
  Rng rng(7);
  for (auto [m, k, n] : {std::array<std::size_t, 3>{1, 1, 1},
                         {3, 4, 2},
                         {5, 7, 9},
                         {17, 23, 13}}) {
    auto a = test::random_vec(m * k, rng);
    auto b = test::random_vec(k * n, rng);
    auto want = naive_gemm(a, b, m, k, n);
    for (const auto* backend : kern::available_backends()) {
      std::vector<double> c(m * n, 0.0);
      backend->gemm_nn(a.data(), b.data(), c.data(), m, k, n);
      CAPTURE(backend->name);
      CHECK(test::bitwise_equal(c, want));
    }
  }
}

TEST_CASE("all backends agree bitwise with the scalar reference") {
  Rng rng(11);
  const auto& ref = kern::scalar_backend();
  const auto backends = kern::available_backends();
  REQUIRE(!backends.empty());

  for (std::size_t trial = 0; trial < 8; ++trial) {
    const std::size_t m = 1 + rng.below(9);
    const std::size_t k = 1 + rng.below(17);
    const std::size_t n = 1 + rng.below(23);
    auto a = test::random_vec(m * k, rng);
    auto b = test::random_vec(k * n, rng);
    auto bt = test::random_vec(n * k, rng);
    auto at = test::random_vec(k * m, rng);

    std::vector<double> want_nn(m * n, 0.5), want_tn(m * n, 0.5), want_nt(m * n, 0.5);
    ref.gemm_nn(a.data(), b.data(), want_nn.data(), m, k, n);
    ref.gemm_tn(at.data(), b.data(), want_tn.data(), k, m, n);
    ref.gemm_nt(a.data(), bt.data(), want_nt.data(), m, k, n);

    for (const auto* bk : backends) {
      CAPTURE(bk->name);
      std::vector<double> c(m * n, 0.5);
      bk->gemm_nn(a.data(), b.data(), c.data(), m, k, n);
      CHECK(test::bitwise_equal(c, want_nn));
      c.assign(m * n, 0.5);
      bk->gemm_tn(at.data(), b.data(), c.data(), k, m, n);
      CHECK(test::bitwise_equal(c, want_tn));
      c.assign(m * n, 0.5);
      bk->gemm_nt(a.data(), bt.data(), c.data(), m, k, n);
      CHECK(test::bitwise_equal(c, want_nt));
    }
  }
}

TEST_CASE("elementwise kernels agree bitwise across backends") {
  Rng rng(13);
  const auto& ref = kern::scalar_backend();
  for (std::size_t n : {std::size_t{1}, std::size_t{5}, std::size_t{64},
                        std::size_t{67}, std::size_t{1031}}) {
    auto x = test::random_vec(n, rng, -2.0, 2.0);
    auto y = test::random_vec(n, rng, -2.0, 2.0);
    // Salt with signed zeros and exact threshold hits.
    if (n >= 5) {
      x[0] = 0.0;
      x[1] = -0.0;
      x[2] = 0.25;
      x[3] = -0.25;
    }

    std::vector<double> want(n), got(n);
    for (const auto* bk : kern::available_backends()) {
      CAPTURE(bk->name);

      ref.relu(x.data(), want.data(), n);
      bk->relu(x.data(), got.data(), n);
      CHECK(test::bitwise_equal(got, want));

      want = y;
      got = y;
      ref.relu_bwd(x.data(), x.data(), want.data(), n);
      bk->relu_bwd(x.data(), x.data(), got.data(), n);
      CHECK(test::bitwise_equal(got, want));

      ref.add(x.data(), y.data(), want.data(), n);
      bk->add(x.data(), y.data(), got.data(), n);
      CHECK(test::bitwise_equal(got, want));

      ref.sub(x.data(), y.data(), want.data(), n);
      bk->sub(x.data(), y.data(), got.data(), n);
      CHECK(test::bitwise_equal(got, want));

      ref.mul(x.data(), y.data(), want.data(), n);
      bk->mul(x.data(), y.data(), got.data(), n);
      CHECK(test::bitwise_equal(got, want));

      want = y;
      got = y;
      ref.axpy(0.37, x.data(), want.data(), n);
      bk->axpy(0.37, x.data(), got.data(), n);
      CHECK(test::bitwise_equal(got, want));

      ref.scale(x.data(), -1.7, want.data(), n);
      bk->scale(x.data(), -1.7, got.data(), n);
      CHECK(test::bitwise_equal(got, want));

      ref.soft_threshold(x.data(), 0.25, want.data(), n);
      bk->soft_threshold(x.data(), 0.25, got.data(), n);
      CHECK(test::bitwise_equal(got, want));
    }
  }
}

TEST_CASE("soft_threshold semantics") {
  const auto& bk = kern::backend();
  const std::vector<double> x = {1.0, -1.0, 0.1, -0.1, 0.25, -0.25, 0.0};
  std::vector<double> y(x.size());
  bk.soft_threshold(x.data(), 0.25, y.data(), x.size());
  CHECK(y[0] == doctest::Approx(0.75));
  CHECK(y[1] == doctest::Approx(-0.75));
  CHECK(y[2] == 0.0);
  CHECK(y[3] == 0.0);
  CHECK(y[4] == 0.0);  // |x| == tau shrinks to exactly zero
  CHECK(y[5] == 0.0);
  CHECK(y[6] == 0.0);
}

TEST_CASE("adam_step agrees across backends and with a hand-rolled update") {
  Rng rng(17);
  const std::size_t n = 129;
  auto w0 = test::random_vec(n, rng);
  auto g = test::random_vec(n, rng);
  const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double bc1 = 1.0 - b1, bc2 = 1.0 - b2;  // step 1

  std::vector<double> want_w, want_m, want_v;
  bool first = true;
  for (const auto* bk : kern::available_backends()) {
    CAPTURE(bk->name);
    auto w = w0;
    std::vector<double> m(n, 0.0), v(n, 0.0);
    bk->adam_step(w.data(), m.data(), v.data(), g.data(), n, lr, b1, b2, eps,
                  bc1, bc2);
    if (first) {
      want_w = w;
      want_m = m;
      want_v = v;
      first = false;
      // Hand-rolled single element check.
      const double mh = ((1 - b1) * g[0]) / bc1;
      const double vh = ((1 - b2) * g[0] * g[0]) / bc2;
      CHECK(w[0] == doctest::Approx(w0[0] - lr * mh / (std::sqrt(vh) + eps)));
    } else {
      CHECK(test::bitwise_equal(w, want_w));
      CHECK(test::bitwise_equal(m, want_m));
      CHECK(test::bitwise_equal(v, want_v));
    }
  }
}

TEST_CASE("l2sq_scan agrees across backends and with direct distances") {
  Rng rng(19);
  const std::size_t k = 13, d = 7;
  auto q = test::random_vec(d, rng);
  auto centroids = test::random_vec(k * d, rng);  // [k x d]
  std::vector<double> ct(d * k);
  kern::transpose(centroids.data(), ct.data(), k, d);

  std::vector<double> want(k);
  for (std::size_t c = 0; c < k; ++c) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = q[j] - centroids[c * d + j];
      s += diff * diff;
    }
    want[c] = s;
  }
  for (const auto* bk : kern::available_backends()) {
    CAPTURE(bk->name);
    std::vector<double> got(k);
    bk->l2sq_scan(q.data(), ct.data(), k, d, got.data());
    for (std::size_t c = 0; c < k; ++c) {
      CHECK(got[c] == doctest::Approx(want[c]).epsilon(1e-12));
    }
  }
}

TEST_CASE("simd backend is present on this x86-64 host") {
#if defined(__x86_64__)
  if (__builtin_cpu_supports("avx2")) {
    bool found = false;
    for (const auto* bk : kern::available_backends()) {
      found = found || std::string(bk->name) == "avx2";
    }
    CHECK(found);
  }
#endif
}

}  // TEST_SUITE
