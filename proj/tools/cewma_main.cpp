#include "cewma/cli.hpp"

int main(int argc, char** argv) { return cewma::run_cli(argc, argv); }
