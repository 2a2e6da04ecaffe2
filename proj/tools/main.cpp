#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"graphreg: similarity-graph-regularized classifier training"};
    CLI11_PARSE(app, argc, argv);
    std::cout << "graphreg CLI stub\n";
    return 0;
}
