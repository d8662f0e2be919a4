#include "mhp/cli.hpp"

int main(int argc, char** argv) { return mhp::run_cli(argc, argv); }
