#include "cli.hpp"

int main(int argc, char** argv) { return subsea::cli::run_cli(argc, argv); }
