#include "exlab/kernels.hpp"

namespace exlab::kernels {
namespace {

void affine_rows_scalar(const double* const* rows, std::size_t width, const double* weight,
                        const double* base, double* out, std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) {
        double acc = base[k];
        for (std::size_t x = 0; x < width; ++x) {
            const double r = rows[x][k];
            acc += r > 0.0 ? r * weight[x] : 0.0;
        }
        out[k] = acc;
    }
}

void count_tails_scalar(const double* u, std::size_t count, const double* thresholds,
                        std::size_t n_thresholds, std::int64_t* tails) {
    for (std::size_t c = 0; c < n_thresholds; ++c) {
        const double t = thresholds[c];
        std::int64_t hits = 0;
        for (std::size_t i = 0; i < count; ++i) {
            hits += u[i] >= t ? 1 : 0;
        }
        tails[c] += hits;
    }
}

std::size_t masked_argmin_scalar(const double* values, const std::uint8_t* mask,
                                 std::size_t count) {
    std::size_t best = count;
    for (std::size_t i = 0; i < count; ++i) {
        if (mask[i] != 0 && (best == count || values[i] < values[best])) {
            best = i;
        }
    }
    return best;
}

}  // namespace

const KernelTable& scalar_table() noexcept {
    static const KernelTable table{"scalar", &affine_rows_scalar, &count_tails_scalar,
                                   &masked_argmin_scalar};
    return table;
}

}  // namespace exlab::kernels
