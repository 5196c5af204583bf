#include <cstdlib>
#include <string_view>

#include "exlab/kernels.hpp"

namespace exlab::kernels {

const KernelTable& active() noexcept {
    static const KernelTable& chosen = []() -> const KernelTable& {
        const char* forced = std::getenv("EXLAB_KERNELS");
        if (forced != nullptr && std::string_view(forced) == "scalar") {
            return scalar_table();
        }
        if (const KernelTable* t = avx2_table()) {
            return *t;
        }
        if (const KernelTable* t = neon_table()) {
            return *t;
        }
        return scalar_table();
    }();
    return chosen;
}

}  // namespace exlab::kernels
