#include "advp/cli.hpp"

int main(int argc, char** argv) { return advp::cli::run_cli(argc, argv); }
