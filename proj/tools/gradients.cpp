#include <string>
#include <vector>

#include "gradients/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return gradients::cli::run(args);
}
