#include "prognos/cli.hpp"

int main(int argc, char** argv) { return prognos::cli::run_cli(argc, argv); }
