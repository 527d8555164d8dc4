#include "memsc/kernels/kernels.hpp"

// Reference kernels. Plain loops, no pragmas: these define the semantics the
// vectorized variants are tested against.

namespace memsc::kernels::detail {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal_scalar(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void vadd_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void vsub_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void vmul_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

double vsum_scalar(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

double vmax_scalar(const double* a, std::size_t n) {
    double m = a[0];
    for (std::size_t i = 1; i < n; ++i)
        if (a[i] > m) m = a[i];
    return m;
}

void gemv_scalar(const double* a, const double* x, double* y, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) y[i] = dot_scalar(a + i * n, x, n);
}

void gemv_t_acc_scalar(const double* a, const double* x, double* y, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) axpy_scalar(x[i], a + i * n, y, n);
}

void ger_acc_scalar(double* a, double alpha, const double* x, const double* y, std::size_t m,
                    std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) axpy_scalar(alpha * x[i], y, a + i * n, n);
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table = {
        dot_scalar,  axpy_scalar, scal_scalar,        vadd_scalar,    vsub_scalar, vmul_scalar,
        vsum_scalar, vmax_scalar, gemv_scalar, gemv_t_acc_scalar, ger_acc_scalar,
    };
    return table;
}

}  // namespace memsc::kernels::detail
