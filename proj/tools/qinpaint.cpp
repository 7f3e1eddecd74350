#include <iostream>
#include <string>
#include <vector>

#include "qinpaint/cli/app.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv, argv + argc);
    return qinpaint::cli::run(args, std::cout, std::cerr);
}
