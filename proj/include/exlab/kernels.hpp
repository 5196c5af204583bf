#pragma once

// Data-parallel inner loops with a portable scalar reference and SIMD variants
// picked once at runtime. Every variant performs the same floating-point
// operations in the same order, so results are bit-identical across paths.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace exlab::kernels {

/// out[k] = base[k] + sum_x (rows[x][k] > 0 ? rows[x][k] * weight[x] : 0)
///
/// `rows` is a structure-of-arrays block: `width` row pointers each holding
/// `count` values. Zero entries contribute nothing even when the matching
/// weight is infinite, which gives the 0 log 0 = 0 convention when the
/// weights are log-probabilities.
using AffineRowsFn = void (*)(const double* const* rows, std::size_t width, const double* weight,
                              const double* base, double* out, std::size_t count);

/// tails[c] += #{ i : u[i] >= thresholds[c] } for c in [0, n_thresholds).
/// Symbol counts follow by differencing the tails of a cumulative table.
using CountTailsFn = void (*)(const double* u, std::size_t count, const double* thresholds,
                              std::size_t n_thresholds, std::int64_t* tails);

/// Index of the smallest value among entries whose mask byte is non-zero;
/// ties go to the lowest index. Returns `count` when nothing is selected.
using MaskedArgminFn = std::size_t (*)(const double* values, const std::uint8_t* mask,
                                       std::size_t count);

struct KernelTable {
    std::string_view name;
    AffineRowsFn affine_rows;
    CountTailsFn count_tails;
    MaskedArgminFn masked_argmin;
};

const KernelTable& scalar_table() noexcept;

/// Returns nullptr when the variant was not compiled in or the CPU lacks it.
const KernelTable* avx2_table() noexcept;
const KernelTable* neon_table() noexcept;

/// Best available table. The environment variable EXLAB_KERNELS=scalar forces
/// the reference path.
const KernelTable& active() noexcept;

}  // namespace exlab::kernels
