// AVX2 variants. This translation unit is compiled with -mavx2 and only
// entered after a runtime CPU check.

#include "exlab/kernels.hpp"

#if defined(__x86_64__) && defined(EXLAB_HAVE_AVX2)

#include <immintrin.h>

#include <cstring>
#include <limits>

namespace exlab::kernels {
namespace {

constexpr std::size_t kLanes = 4;

void affine_rows_avx2(const double* const* rows, std::size_t width, const double* weight,
                      const double* base, double* out, std::size_t count) {
    const std::size_t simd_end = count - count % kLanes;
    const __m256d zero = _mm256_setzero_pd();
    for (std::size_t k = 0; k < simd_end; k += kLanes) {
        __m256d acc = _mm256_loadu_pd(base + k);
        for (std::size_t x = 0; x < width; ++x) {
            const __m256d r = _mm256_loadu_pd(rows[x] + k);
            const __m256d keep = _mm256_cmp_pd(r, zero, _CMP_GT_OQ);
            const __m256d prod = _mm256_mul_pd(r, _mm256_set1_pd(weight[x]));
            acc = _mm256_add_pd(acc, _mm256_and_pd(keep, prod));
        }
        _mm256_storeu_pd(out + k, acc);
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

void count_tails_avx2(const double* u, std::size_t count, const double* thresholds,
                      std::size_t n_thresholds, std::int64_t* tails) {
    const std::size_t simd_end = count - count % kLanes;
    for (std::size_t c = 0; c < n_thresholds; ++c) {
        const __m256d t = _mm256_set1_pd(thresholds[c]);
        std::int64_t hits = 0;
        for (std::size_t i = 0; i < simd_end; i += kLanes) {
            const __m256d ge = _mm256_cmp_pd(_mm256_loadu_pd(u + i), t, _CMP_GE_OQ);
            hits += __builtin_popcount(static_cast<unsigned>(_mm256_movemask_pd(ge)));
        }
        for (std::size_t i = simd_end; i < count; ++i) {
            hits += u[i] >= thresholds[c] ? 1 : 0;
        }
        tails[c] += hits;
    }
}

std::size_t masked_argmin_avx2(const double* values, const std::uint8_t* mask,
                               std::size_t count) {
    const std::size_t simd_end = count - count % kLanes;
    const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    __m256d vmin = inf;
    bool any = false;
    for (std::size_t i = 0; i < simd_end; i += kLanes) {
        int packed = 0;
        std::memcpy(&packed, mask + i, sizeof(packed));
        const __m256i m8 = _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(packed));
        const __m256d keep =
            _mm256_castsi256_pd(_mm256_cmpgt_epi64(m8, _mm256_setzero_si256()));
        any = any || _mm256_movemask_pd(keep) != 0;
        vmin = _mm256_min_pd(vmin, _mm256_blendv_pd(inf, _mm256_loadu_pd(values + i), keep));
    }
    double lanes[kLanes];
    _mm256_storeu_pd(lanes, vmin);
    double best_value = std::numeric_limits<double>::infinity();
    for (double v : lanes) {
        best_value = v < best_value ? v : best_value;
    }
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

const KernelTable* avx2_table() noexcept {
    static const bool supported =
        __builtin_cpu_supports("avx2") != 0 && __builtin_cpu_supports("avx") != 0;
    static const KernelTable table{"avx2", &affine_rows_avx2, &count_tails_avx2,
                                   &masked_argmin_avx2};
    return supported ? &table : nullptr;
}

}  // namespace exlab::kernels

#else

namespace exlab::kernels {
const KernelTable* avx2_table() noexcept { return nullptr; }
}  // namespace exlab::kernels

#endif
