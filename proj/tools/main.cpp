#include "cli.hpp"

int main(int argc, char** argv) { return bregman::cli_main(argc, argv); }
