#pragma once

#include <cstddef>

// Dense double-precision kernels behind the numeric core. Every kernel has a
// scalar reference implementation and (on x86-64 with AVX2+FMA) a vectorized
// variant; the backend is chosen once at startup from CPUID and can be forced
// with set_backend() or the MEMSC_KERNELS environment variable
// ("scalar"/"avx2"). Both variants are equivalence-tested against each other.
//
// Within one process the selected backend never changes behind the caller's
// back, so repeated runs with the same seed stay bitwise identical.

namespace memsc::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend();
bool backend_supported(Backend b);
// Forces a backend. Returns false (and leaves the selection unchanged) if the
// CPU cannot run it.
bool set_backend(Backend b);
const char* backend_name(Backend b);

// y . x
double dot(const double* a, const double* b, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
// x *= alpha
void scal(double alpha, double* x, std::size_t n);
void vadd(const double* a, const double* b, double* out, std::size_t n);
void vsub(const double* a, const double* b, double* out, std::size_t n);
void vmul(const double* a, const double* b, double* out, std::size_t n);
double vsum(const double* a, std::size_t n);
// max element; n must be >= 1
double vmax(const double* a, std::size_t n);
// y = A x           (A row-major m x n, x length n, y length m)
void gemv(const double* a, const double* x, double* y, std::size_t m, std::size_t n);
// y += A^T x        (A row-major m x n, x length m, y length n)
void gemv_t_acc(const double* a, const double* x, double* y, std::size_t m, std::size_t n);
// A += alpha x y^T  (A row-major m x n, x length m, y length n)
void ger_acc(double* a, double alpha, const double* x, const double* y, std::size_t m, std::size_t n);

namespace detail {

struct KernelTable {
    double (*dot)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scal)(double, double*, std::size_t);
    void (*vadd)(const double*, const double*, double*, std::size_t);
    void (*vsub)(const double*, const double*, double*, std::size_t);
    void (*vmul)(const double*, const double*, double*, std::size_t);
    double (*vsum)(const double*, std::size_t);
    double (*vmax)(const double*, std::size_t);
    void (*gemv)(const double*, const double*, double*, std::size_t, std::size_t);
    void (*gemv_t_acc)(const double*, const double*, double*, std::size_t, std::size_t);
    void (*ger_acc)(double*, double, const double*, const double*, std::size_t, std::size_t);
};

const KernelTable& scalar_table();
// Null when this binary/CPU cannot run AVX2.
const KernelTable* avx2_table();

}  // namespace detail

}  // namespace memsc::kernels
