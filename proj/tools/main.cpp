#include "balloc/cli.hpp"

int main(int argc, char** argv) { return balloc::cli_main(argc, argv); }
