#include "tabrep/cli.hpp"

int main(int argc, char** argv) { return tabrep::run_cli(argc, argv); }
