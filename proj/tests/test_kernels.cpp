#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "vid2ode/kernels.hpp"

using namespace vid2ode;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("scalar kernels match straightforward loops") {
  auto a = random_vec(257, 1);
  auto b = random_vec(257, 2);
  const auto& k = kernels::scalar();

  double ssd = 0.0, dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ssd += (a[i] - b[i]) * (a[i] - b[i]);
    dot += a[i] * b[i];
  }
  CHECK(k.sum_sq_diff(a.data(), b.data(), a.size()) == doctest::Approx(ssd).epsilon(1e-13));
  CHECK(k.dot(a.data(), b.data(), a.size()) == doctest::Approx(dot).epsilon(1e-13));

  auto y = b;
  k.axpy(0.75, a.data(), y.data(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(y[i] == doctest::Approx(b[i] + 0.75 * a[i]).epsilon(1e-15));

  std::vector<double> out(a.size()), t(a.size());
  k.tanh_squash(a.data(), out.data(), t.data(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(t[i] == doctest::Approx(std::tanh(a[i])).epsilon(1e-15));
    CHECK(out[i] == doctest::Approx((std::tanh(a[i]) + 1.0) / 2.0).epsilon(1e-15));
    CHECK(out[i] >= 0.0);
    CHECK(out[i] <= 1.0);
  }
}

TEST_CASE("avx2 variants agree with scalar reference") {
  const kernels::Ops* simd = kernels::avx2_if_supported();
  if (!simd) {
    MESSAGE("AVX2 not supported on this host; equivalence suite skipped");
    return;
  }
  const auto& ref = kernels::scalar();

  // Sizes straddling vector width boundaries, including short tails.
  for (std::size_t n : {1u, 3u, 4u, 5u, 8u, 15u, 64u, 1000u, 12289u}) {
    auto a = random_vec(n, 10 + n);
    auto b = random_vec(n, 20 + n);

    CHECK(simd->sum_sq_diff(a.data(), b.data(), n) ==
          doctest::Approx(ref.sum_sq_diff(a.data(), b.data(), n)).epsilon(1e-12));
    CHECK(simd->dot(a.data(), b.data(), n) ==
          doctest::Approx(ref.dot(a.data(), b.data(), n)).epsilon(1e-12));

    std::vector<float> bf(n);
    for (std::size_t i = 0; i < n; ++i) bf[i] = static_cast<float>(b[i]);
    CHECK(simd->sum_sq_diff_f(a.data(), bf.data(), n) ==
          doctest::Approx(ref.sum_sq_diff_f(a.data(), bf.data(), n)).epsilon(1e-12));

    auto y1 = b, y2 = b;
    ref.axpy(-1.3, a.data(), y1.data(), n);
    simd->axpy(-1.3, a.data(), y2.data(), n);
    // FMA contraction in the vector path differs from mul+add by <= 1 ulp.
    for (std::size_t i = 0; i < n; ++i)
      CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-14));

    auto w = random_vec(n, 30 + n);
    for (auto& x : w) x = (x + 2.0) / 4.0;  // weights in [0,1]
    std::vector<double> o1(n), o2(n);
    ref.blend(w.data(), a.data(), b.data(), o1.data(), n);
    simd->blend(w.data(), a.data(), b.data(), o2.data(), n);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(o1[i] == doctest::Approx(o2[i]).epsilon(1e-14));

    std::vector<double> s1(n), t1(n), s2(n), t2(n);
    ref.tanh_squash(a.data(), s1.data(), t1.data(), n);
    simd->tanh_squash(a.data(), s2.data(), t2.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(s1[i] == doctest::Approx(s2[i]).epsilon(1e-12));
      CHECK(t1[i] == doctest::Approx(t2[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("active dispatch names a real table") {
  const std::string& name = kernels::active_name();
  CHECK((name == "avx2" || name == "scalar"));
  if (kernels::avx2_if_supported())
    CHECK(name == "avx2");
  else
    CHECK(name == "scalar");
}

TEST_CASE("kernels are bitwise deterministic across repeat calls") {
  auto a = random_vec(12289, 7);
  auto b = random_vec(12289, 8);
  double first = kernels::sum_sq_diff(a.data(), b.data(), a.size());
  for (int i = 0; i < 5; ++i)
    CHECK(kernels::sum_sq_diff(a.data(), b.data(), a.size()) == first);
}
