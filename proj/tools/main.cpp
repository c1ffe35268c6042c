#include "acdc/cli.hpp"

int main(int argc, char** argv) { return acdc::cli::run_main(argc, argv); }
