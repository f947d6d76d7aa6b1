#include <string>
#include <vector>

#include "qpon/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return qpon::run_cli(args);
}
