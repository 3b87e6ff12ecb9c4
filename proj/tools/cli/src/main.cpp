#include <iostream>
#include <string>
#include <vector>

#include "kslight_cli/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return kslight::cli::dispatch(args, std::cout, std::cerr);
}
