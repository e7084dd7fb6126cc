#include "infodyn/cli.hpp"

int main(int argc, char** argv) { return infodyn::cli::run_cli(argc, argv); }
