#include "ghcm/cli.hpp"

int main(int argc, char** argv) { return ghcm::cli_main(argc, argv); }
