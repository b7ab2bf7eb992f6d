// Hot transcendental row kernels. This translation unit is compiled with
// -ffast-math so the compiler can emit libmvec vector calls for exp; the
// results match the scalar libm path to a few ulp. No NaN/Inf handling may
// live in this file.

#include <cmath>

namespace fairegm {

void exp_neg_abs_row(const double* z, double* out, int n) {
#pragma omp simd
  for (int i = 0; i < n; ++i) out[i] = __builtin_exp(-__builtin_fabs(z[i]));
}

void sigmoid_row(const double* z, double* out, int n) {
#pragma omp simd
  for (int i = 0; i < n; ++i) {
    const double e = __builtin_exp(-__builtin_fabs(z[i]));
    out[i] = z[i] >= 0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
  }
}

// p[i] = sigmoid(z[i]) and lg[i] = log(1 + exp(-|z[i]|)), the shared pieces
// of the stable BCE evaluation: BCE(t, sigmoid(z)) = max(-+z, 0) + lg.
void sigmoid_and_log1p_row(const double* z, double* p, double* lg, int n) {
#pragma omp simd
  for (int i = 0; i < n; ++i) {
    const double e = __builtin_exp(-__builtin_fabs(z[i]));
    const double inv = 1.0 / (1.0 + e);
    p[i] = z[i] >= 0 ? inv : e * inv;
    lg[i] = __builtin_log(1.0 + e);
  }
}

}  // namespace fairegm
