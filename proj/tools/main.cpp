#include "hvlab/cli.hpp"

int main(int argc, char** argv) { return hvlab::cli::run_main(argc, argv); }
