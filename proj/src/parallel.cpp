#include "ugvnet/parallel.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ugvnet::parallel {

namespace {
int g_thread_cap = 0;  // 0 = runtime default
}

void set_num_threads(int n) {
    g_thread_cap = std::max(n, 0);
}

int num_threads() {
#ifdef _OPENMP
    const int hw = omp_get_max_threads();
    return g_thread_cap > 0 ? std::min(g_thread_cap, hw) : hw;
#else
    return 1;
#endif
}

bool openmp_enabled() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

}  // namespace ugvnet::parallel
