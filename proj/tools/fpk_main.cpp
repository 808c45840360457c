#include "fpk/cli.hpp"

int main(int argc, char** argv) { return fpk::run_cli(argc, argv); }
