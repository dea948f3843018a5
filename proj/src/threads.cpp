#include "osmee/threads.hpp"

#include <cstdlib>
#include <string>

#include <omp.h>

namespace osmee {

void apply_thread_cap() {
    const char* env = std::getenv("OSMEE_THREADS");
    if (!env) return;
    try {
        int v = std::stoi(env);
        if (v > 0) omp_set_num_threads(v);
    } catch (...) {
        // unparseable value: leave the OpenMP default alone
    }
}

int thread_count() {
    return omp_get_max_threads();
}

} // namespace osmee
