#pragma once

#include <cstddef>
#include <string>

// Data-parallel inner loops used by the renderer, decoder and losses.
// Every kernel has a scalar reference implementation and (on x86_64) an
// AVX2 variant selected once at startup after a cpuid check. Lane order
// inside a kernel is fixed, so a given variant is bitwise deterministic;
// scalar and AVX2 variants agree to reduction-reassociation tolerance and
// are equivalence-tested against each other.
namespace vid2ode::kernels {

struct Ops {
  // sum_i (a[i]-b[i])^2
  double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
  // sum_i (a[i]-b[i])^2 with float b (dataset frames are stored as float)
  double (*sum_sq_diff_f)(const double* a, const float* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // dot product
  double (*dot)(const double* a, const double* b, std::size_t n);
  // out[i] = w[i]*c[i] + (1-w[i])*b[i]
  void (*blend)(const double* w, const double* c, const double* b, double* out,
                std::size_t n);
  // out[i] = (tanh(z[i]) + 1) / 2, also writes t[i] = tanh(z[i]) when t != nullptr
  void (*tanh_squash)(const double* z, double* out, double* t, std::size_t n);
};

// The active (dispatched) kernel table.
const Ops& active();
// Reference implementations, always available (used by equivalence tests).
const Ops& scalar();
// AVX2 implementations, or nullptr-free table only if supported at runtime.
const Ops* avx2_if_supported();

// "avx2" or "scalar"
const std::string& active_name();

// Convenience forwarders through the active table.
inline double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  return active().sum_sq_diff(a, b, n);
}
inline double sum_sq_diff(const double* a, const float* b, std::size_t n) {
  return active().sum_sq_diff_f(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline void blend(const double* w, const double* c, const double* b, double* out,
                  std::size_t n) {
  active().blend(w, c, b, out, n);
}
inline void tanh_squash(const double* z, double* out, double* t, std::size_t n) {
  active().tanh_squash(z, out, t, n);
}

}  // namespace vid2ode::kernels
