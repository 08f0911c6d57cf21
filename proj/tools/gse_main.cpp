#include "gse/cli.hpp"

int main(int argc, char** argv) { return gse::run_cli(argc, argv); }
