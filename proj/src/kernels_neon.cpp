// NEON variants for aarch64, where Advanced SIMD is always present.

#include "exlab/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <limits>

namespace exlab::kernels {
namespace {

constexpr std::size_t kLanes = 2;

void affine_rows_neon(const double* const* rows, std::size_t width, const double* weight,
                      const double* base, double* out, std::size_t count) {
    const std::size_t simd_end = count - count % kLanes;
    const float64x2_t zero = vdupq_n_f64(0.0);
    for (std::size_t k = 0; k < simd_end; k += kLanes) {
        float64x2_t acc = vld1q_f64(base + k);
        for (std::size_t x = 0; x < width; ++x) {
            const float64x2_t r = vld1q_f64(rows[x] + k);
            const uint64x2_t keep = vcgtq_f64(r, zero);
            const float64x2_t prod = vmulq_f64(r, vdupq_n_f64(weight[x]));
            const float64x2_t term =
                vreinterpretq_f64_u64(vandq_u64(keep, vreinterpretq_u64_f64(prod)));
            acc = vaddq_f64(acc, term);
        }
        vst1q_f64(out + k, acc);
    }
    for (std::size_t k = simd_end; k < count; ++k) {
        double acc = base[k];
        for (std::size_t x = 0; x < width; ++x) {
            const double r = rows[x][k];
            acc += r > 0.0 ? r * weight[x] : 0.0;
        }
        out[k] = acc;
    }
}

void count_tails_neon(const double* u, std::size_t count, const double* thresholds,
                      std::size_t n_thresholds, std::int64_t* tails) {
    const std::size_t simd_end = count - count % kLanes;
    for (std::size_t c = 0; c < n_thresholds; ++c) {
        const float64x2_t t = vdupq_n_f64(thresholds[c]);
        uint64x2_t hits = vdupq_n_u64(0);
        for (std::size_t i = 0; i < simd_end; i += kLanes) {
            const uint64x2_t ge = vcgeq_f64(vld1q_f64(u + i), t);
            hits = vsubq_u64(hits, vreinterpretq_u64_s64(
                                       vshrq_n_s64(vreinterpretq_s64_u64(ge), 63)));
        }
        std::int64_t total = static_cast<std::int64_t>(vgetq_lane_u64(hits, 0) +
                                                       vgetq_lane_u64(hits, 1));
        for (std::size_t i = simd_end; i < count; ++i) {
            total += u[i] >= thresholds[c] ? 1 : 0;
        }
        tails[c] += total;
    }
}

std::size_t masked_argmin_neon(const double* values, const std::uint8_t* mask,
                               std::size_t count) {
    double best_value = std::numeric_limits<double>::infinity();
    bool any = false;
    const std::size_t simd_end = count - count % kLanes;
    float64x2_t vmin = vdupq_n_f64(best_value);
    for (std::size_t i = 0; i < simd_end; i += kLanes) {
        const double a = mask[i] != 0 ? values[i] : std::numeric_limits<double>::infinity();
        const double b =
            mask[i + 1] != 0 ? values[i + 1] : std::numeric_limits<double>::infinity();
        any = any || mask[i] != 0 || mask[i + 1] != 0;
        const double pair[kLanes] = {a, b};
        vmin = vminq_f64(vmin, vld1q_f64(pair));
    }
    best_value = vminvq_f64(vmin);
    for (std::size_t i = simd_end; i < count; ++i) {
        if (mask[i] != 0) {
            any = true;
            best_value = values[i] < best_value ? values[i] : best_value;
        }
    }
    if (!any) {
        return count;
    }
    for (std::size_t i = 0; i < count; ++i) {
        if (mask[i] != 0 && values[i] == best_value) {
            return i;
        }
    }
    return count;
}

}  // namespace

const KernelTable* neon_table() noexcept {
    static const KernelTable table{"neon", &affine_rows_neon, &count_tails_neon,
                                   &masked_argmin_neon};
    return &table;
}

}  // namespace exlab::kernels

#else

namespace exlab::kernels {
const KernelTable* neon_table() noexcept { return nullptr; }
}  // namespace exlab::kernels

#endif
