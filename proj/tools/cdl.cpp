#include "cdl/cli.hpp"

int main(int argc, char** argv) { return cdl::run_cli(argc, argv); }
