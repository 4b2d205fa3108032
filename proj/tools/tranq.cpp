#include <iostream>

#include "tranq/cli.hpp"

int main(int argc, char** argv) {
    return tranq::cli::run(argc, argv, std::cout, std::cerr);
}
