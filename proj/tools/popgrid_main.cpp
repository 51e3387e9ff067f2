#include "popgrid/cli.hpp"

int main(int argc, char** argv) { return popgrid::cli::run(argc, argv); }
