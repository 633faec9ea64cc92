#include "epicast/cli.hpp"

int main(int argc, char** argv) { return epicast::cli::run_cli(argc, argv); }
