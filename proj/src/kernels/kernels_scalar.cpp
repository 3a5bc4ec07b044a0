#include "saferl/kernels/kernels.hpp"

namespace saferl::kern {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void axpby_scalar(double a, const double* x, double b, double* y,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void matvec_scalar(const double* w, std::size_t rows, std::size_t cols,
                   const double* x, const double* bias, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = bias ? bias[r] : 0.0;
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

void matvec_t_acc_scalar(const double* w, std::size_t rows, std::size_t cols,
                         const double* dy, double* dx) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double g = dy[r];
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) dx[c] += g * row[c];
  }
}

void rank1_acc_scalar(const double* dy, std::size_t rows, const double* x,
                      std::size_t cols, double* dw) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double g = dy[r];
    double* row = dw + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += g * x[c];
  }
}

void relu_scalar(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd_scalar(const double* x, const double* dy, double* dx,
                     std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
}

void clamp_box_scalar(const double* lo, const double* hi, double* x,
                      std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double v = x[i];
    if (v < lo[i]) v = lo[i];
    if (v > hi[i]) v = hi[i];
    x[i] = v;
  }
}

const KernelTable kScalarTable = {
    "scalar",         dot_scalar,   axpy_scalar,     axpby_scalar,
    matvec_scalar,    matvec_t_acc_scalar, rank1_acc_scalar, relu_scalar,
    relu_bwd_scalar,  clamp_box_scalar,
};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalarTable; }

}  // namespace saferl::kern
