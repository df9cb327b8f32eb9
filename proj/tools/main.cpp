#include "swarmot/cli.hpp"

int main(int argc, char** argv) { return swarmot::cli::main_entry(argc, argv); }
