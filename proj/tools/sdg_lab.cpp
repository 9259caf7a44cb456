#include "sdg/cli.hpp"

int main(int argc, char** argv) { return sdg::cli::main(argc, argv); }
