#include <iostream>

#include "dhinf/cli.hpp"
#include "dhinf/linalg.hpp"

int main(int argc, char** argv) {
    dhinf::linalg::select_reliable_blas(argv);
    return dhinf::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
