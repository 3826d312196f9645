#include "stoclot/cli.hpp"

int main(int argc, char** argv) { return stoclot::cli::run(argc, argv); }
