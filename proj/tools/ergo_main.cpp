#include "ergo/cli.hpp"

int main(int argc, char** argv) { return ergo::cli::run_main(argc, argv); }
