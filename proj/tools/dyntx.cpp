#include "dyntx/cli.hpp"

int main(int argc, char** argv) { return dyntx::cli_main(argc, argv); }
