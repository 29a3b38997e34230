#include "finde/cli.hpp"

int main(int argc, char** argv) { return finde::run_cli(argc, argv); }
