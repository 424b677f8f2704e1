#include <iostream>

#include "tte/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return tte::cli::main(args, std::cout, std::cerr);
}
