#include "vid2ode/kernels.hpp"

#include <cmath>

namespace vid2ode::kernels {

namespace {

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double sum_sq_diff_f_scalar(const double* a, const float* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = a[i] - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void blend_scalar(const double* w, const double* c, const double* b, double* out,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = w[i] * c[i] + (1.0 - w[i]) * b[i];
}

void tanh_squash_scalar(const double* z, double* out, double* t, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double th = std::tanh(z[i]);
    if (t) t[i] = th;
    out[i] = 0.5 * (th + 1.0);
  }
}

const Ops kScalarOps = {
    sum_sq_diff_scalar, sum_sq_diff_f_scalar, axpy_scalar,
    dot_scalar,         blend_scalar,         tanh_squash_scalar,
};

const Ops* pick_active(std::string& name) {
  if (const Ops* v = avx2_if_supported()) {
    name = "avx2";
    return v;
  }
  name = "scalar";
  return &kScalarOps;
}

}  // namespace

#ifndef VID2ODE_HAVE_AVX2_KERNELS
const Ops* avx2_if_supported() { return nullptr; }
#endif

const Ops& scalar() { return kScalarOps; }

namespace {
std::string g_active_name;
const Ops* g_active = pick_active(g_active_name);
}  // namespace

const Ops& active() { return *g_active; }
const std::string& active_name() { return g_active_name; }

}  // namespace vid2ode::kernels
