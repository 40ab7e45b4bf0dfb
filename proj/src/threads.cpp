#include "ntt/config.hpp"

#include <Eigen/Core>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ntt {

// Eigen's GEMM splits work over output blocks only, so results do not
// depend on the worker count.
void set_threads(int n)
{
    if (n <= 0)
        return;
    Eigen::setNbThreads(n);
#ifdef _OPENMP
    omp_set_num_threads(n);
#endif
}

int thread_count() { return Eigen::nbThreads(); }

} // namespace ntt
