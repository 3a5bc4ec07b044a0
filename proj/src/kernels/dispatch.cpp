#include <cstdlib>
#include <cstring>

#include "saferl/kernels/kernels.hpp"

namespace saferl::kern {

namespace {

const KernelTable* select() noexcept {
  if (const char* env = std::getenv("SAFERL_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return &scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
    if (std::strcmp(env, "avx2") == 0 && avx2_supported()) {
      return &avx2_table();
    }
#endif
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (avx2_supported()) return &avx2_table();
#endif
  return &scalar_table();
}

}  // namespace

const KernelTable& active() noexcept {
  static const KernelTable* chosen = select();
  return *chosen;
}

std::vector<const KernelTable*> all_tables() {
  std::vector<const KernelTable*> tables{&scalar_table()};
#if defined(__x86_64__) || defined(_M_X64)
  if (avx2_supported()) tables.push_back(&avx2_table());
#endif
  return tables;
}

}  // namespace saferl::kern
