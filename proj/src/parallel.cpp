#include "scl/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef SCL_HAVE_OPENMP
#include <omp.h>
#endif

namespace scl::par {

int thread_cap() {
    const char* env = std::getenv("SCL_THREADS");
    if (!env || !*env) return 0;
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end == env || v < 0) return 0;
    return static_cast<int>(v);
}

void apply_thread_cap() {
#ifdef SCL_HAVE_OPENMP
    const int cap = thread_cap();
    if (cap > 0) omp_set_num_threads(cap);
#endif
}

int active_threads() {
#ifdef SCL_HAVE_OPENMP
    const int cap = thread_cap();
    const int hw = omp_get_max_threads();
    return (cap > 0 && cap < hw) ? cap : hw;
#else
    return 1;
#endif
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body) {
#ifdef SCL_HAVE_OPENMP
    const int nt = active_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (std::int64_t i = 0; i < n; ++i) body(i);
#else
    parallel_for_serial(n, body);
#endif
}

void parallel_for_serial(std::int64_t n, const std::function<void(std::int64_t)>& body) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
}

} // namespace scl::par
