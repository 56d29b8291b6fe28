#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "tfperf/cli.hpp"

int main(int argc, char** argv) {
    try {
        return tfperf::run(std::vector<std::string>(argv + 1, argv + argc));
    } catch (const std::exception& e) {
        std::cerr << "tfperf: fatal: " << e.what() << '\n';
        return 1;
    }
}
