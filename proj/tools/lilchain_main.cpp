#include <iostream>
#include <string>
#include <vector>

#include "lilchain/cli.hpp"

int main(int argc, char** argv) {
    return lilchain::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
