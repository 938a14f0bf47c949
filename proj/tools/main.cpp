#include "sic/cli.hpp"

#include <string>
#include <vector>

int main(int argc, char** argv) { return sic::cli::run(std::vector<std::string>(argv, argv + argc)); }
