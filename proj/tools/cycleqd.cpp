#include "cycleqd/cli.hpp"

int main(int argc, char** argv) { return cycleqd::cli::main(argc, argv); }
