#include <iostream>
#include <string>
#include <vector>

#include "ledger/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return ledger::cli::run(args, std::cout, std::cerr);
}
