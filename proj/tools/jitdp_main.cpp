#include <string>
#include <vector>

#include "jitdp/cli.hpp"

int main(int argc, char** argv) {
    return jitdp::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
