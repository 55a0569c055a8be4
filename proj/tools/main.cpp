#include "rfi/cli.hpp"

int main(int argc, char** argv) { return rfi::cli_main(argc, argv); }
