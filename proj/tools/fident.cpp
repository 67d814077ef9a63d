// fident: rotational uniqueness and identification checks for oblique factor models.
//
// Usage: fident check|rotations|identify|fit|demo <spec.json> [options]

#include "fident/cli.hpp"

#include <iostream>

int main(int argc, char* argv[]) {
    return fident::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
