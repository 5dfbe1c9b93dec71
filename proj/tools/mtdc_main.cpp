#include "mtdc/cli.hpp"

#include <cstdlib>

int main(int argc, char** argv) {
    // The outer sweeps carry the OpenMP parallelism; keep BLAS single-threaded.
    setenv("OPENBLAS_NUM_THREADS", "1", 0);
    return mtdc::cli_main(argc, argv);
}
