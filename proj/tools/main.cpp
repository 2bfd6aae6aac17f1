#include <string>
#include <vector>

#include "medrep/cli.hpp"

int main(int argc, char** argv) {
    return medrep::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
