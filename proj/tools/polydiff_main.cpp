#include "polydiff/cli.hpp"

int main(int argc, char** argv) { return polydiff::cli_main(argc, argv); }
