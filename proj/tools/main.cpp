#include <string>
#include <vector>

#include "tryline/io.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return tryline::run_cli(args);
}
