#include "memsc/kernels/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace memsc::kernels {

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

struct Selection {
    Backend backend;
    const detail::KernelTable* table;
};

Selection pick_initial() {
    const detail::KernelTable* avx2 = detail::avx2_table();
    bool want_avx2 = avx2 != nullptr && cpu_has_avx2_fma();
    if (const char* env = std::getenv("MEMSC_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) want_avx2 = false;
        // "avx2" keeps the default; an unsupported request falls back to scalar.
    }
    if (want_avx2) return {Backend::avx2, avx2};
    return {Backend::scalar, &detail::scalar_table()};
}

std::atomic<const detail::KernelTable*>& table_slot() {
    static std::atomic<const detail::KernelTable*> slot{pick_initial().table};
    return slot;
}

std::atomic<Backend>& backend_slot() {
    static std::atomic<Backend> slot{pick_initial().backend};
    return slot;
}

const detail::KernelTable& table() { return *table_slot().load(std::memory_order_relaxed); }

}  // namespace

Backend active_backend() { return backend_slot().load(std::memory_order_relaxed); }

bool backend_supported(Backend b) {
    if (b == Backend::scalar) return true;
    return detail::avx2_table() != nullptr && cpu_has_avx2_fma();
}

bool set_backend(Backend b) {
    if (!backend_supported(b)) return false;
    table_slot().store(b == Backend::avx2 ? detail::avx2_table() : &detail::scalar_table(),
                       std::memory_order_relaxed);
    backend_slot().store(b, std::memory_order_relaxed);
    return true;
}

const char* backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

double dot(const double* a, const double* b, std::size_t n) { return table().dot(a, b, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { table().axpy(alpha, x, y, n); }
void scal(double alpha, double* x, std::size_t n) { table().scal(alpha, x, n); }
void vadd(const double* a, const double* b, double* out, std::size_t n) { table().vadd(a, b, out, n); }
void vsub(const double* a, const double* b, double* out, std::size_t n) { table().vsub(a, b, out, n); }
void vmul(const double* a, const double* b, double* out, std::size_t n) { table().vmul(a, b, out, n); }
double vsum(const double* a, std::size_t n) { return table().vsum(a, n); }
double vmax(const double* a, std::size_t n) { return table().vmax(a, n); }
void gemv(const double* a, const double* x, double* y, std::size_t m, std::size_t n) {
    table().gemv(a, x, y, m, n);
}
void gemv_t_acc(const double* a, const double* x, double* y, std::size_t m, std::size_t n) {
    table().gemv_t_acc(a, x, y, m, n);
}
void ger_acc(double* a, double alpha, const double* x, const double* y, std::size_t m,
             std::size_t n) {
    table().ger_acc(a, alpha, x, y, m, n);
}

}  // namespace memsc::kernels
