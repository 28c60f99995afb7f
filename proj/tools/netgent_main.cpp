#include "netgent/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return netgent::cli::run_cli(argc, argv, std::cout, std::cerr);
}
