#include "ctstep/cli.hpp"

int main(int argc, char** argv) { return ctstep::run_cli(argc, argv); }
