#include "qinpaint/parallel.hpp"

#include <Eigen/Core>

#include <cstdlib>
#include <string>

#ifdef QINPAINT_HAVE_OPENMP
#include <omp.h>
#endif

namespace qinpaint {

void set_num_threads(int n) {
    if (n < 1) n = 1;
    Eigen::setNbThreads(n);
#ifdef QINPAINT_HAVE_OPENMP
    omp_set_num_threads(n);
#endif
}

int num_threads() {
#ifdef QINPAINT_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

int threads_from_environment(int fallback) {
    const char* v = std::getenv("QINPAINT_THREADS");
    if (v == nullptr || *v == '\0') return fallback;
    try {
        const int n = std::stoi(v);
        return n >= 1 ? n : fallback;
    } catch (const std::exception&) {
        return fallback;
    }
}

}  // namespace qinpaint
