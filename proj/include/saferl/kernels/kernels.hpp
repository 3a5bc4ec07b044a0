#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace saferl::kern {

// Dense double-precision primitives behind the MLP stack and the tabular
// Bellman sweeps. One table per backend; active() picks the widest one the
// host supports at first use. Matrices are row-major.
struct KernelTable {
  const char* name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = a * x + b * y
  void (*axpby)(double a, const double* x, double b, double* y, std::size_t n);
  // y = W x + bias  (bias may be null)
  void (*matvec)(const double* w, std::size_t rows, std::size_t cols,
                 const double* x, const double* bias, double* y);
  // dx += W^T dy
  void (*matvec_t_acc)(const double* w, std::size_t rows, std::size_t cols,
                       const double* dy, double* dx);
  // dW += dy x^T
  void (*rank1_acc)(const double* dy, std::size_t rows, const double* x,
                    std::size_t cols, double* dw);
  void (*relu)(const double* x, double* y, std::size_t n);
  // dx = dy where x > 0, else 0
  void (*relu_bwd)(const double* x, const double* dy, double* dx,
                   std::size_t n);
  // x = min(max(x, lo), hi), elementwise bounds
  void (*clamp_box)(const double* lo, const double* hi, double* x,
                    std::size_t n);
};

const KernelTable& scalar_table() noexcept;

#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table() noexcept;
bool avx2_supported() noexcept;
#endif

// Backend chosen once per process: SAFERL_KERNELS=scalar|avx2 overrides,
// otherwise the best supported table wins.
const KernelTable& active() noexcept;

// Every table compiled into this binary (scalar first). Used by the
// cross-backend equivalence tests.
std::vector<const KernelTable*> all_tables();

}  // namespace saferl::kern
