#include "fockscope/cli.hpp"

int main(int argc, char** argv) { return fockscope::run_cli(argc, argv); }
