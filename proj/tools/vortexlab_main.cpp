#include "vortexlab/cli.hpp"

int main(int argc, char** argv) { return vortexlab::cli::main(argc, argv); }
