#include "sfe/cli.hpp"

int main(int argc, char** argv) { return sfe::cli::run(argc, argv); }
