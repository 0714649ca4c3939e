#pragma once

#include <cstddef>
#include <string>

namespace regfeal::kernels {

// Batched evaluation of the normalised Hermite recurrence.
// out is a (k_max+1) x n row-major table: out[k*n + i] = h_k(x[i]).
using HermiteBatchFn = void (*)(int k_max, const double* x, std::size_t n, double* out);

// Elementwise out[i] *= src[i].
using MulAccumulateFn = void (*)(const double* src, std::size_t n, double* out);

void hermite_batch_scalar(int k_max, const double* x, std::size_t n, double* out);
void mul_accumulate_scalar(const double* src, std::size_t n, double* out);

#if defined(__x86_64__) || defined(_M_X64)
void hermite_batch_avx2(int k_max, const double* x, std::size_t n, double* out);
void mul_accumulate_avx2(const double* src, std::size_t n, double* out);
#endif

// Runtime-selected best variants for this CPU.
HermiteBatchFn hermite_batch();
MulAccumulateFn mul_accumulate();

// Name of the active dispatch target ("scalar" or "avx2").
std::string active_target();

}  // namespace regfeal::kernels
