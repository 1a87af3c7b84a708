#include <vector>

#include "fitkd/cli.hpp"

int main(int argc, char** argv) {
    return fitkd::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
