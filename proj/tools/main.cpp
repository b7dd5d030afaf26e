#include "cli.hpp"

int main(int argc, char** argv) { return scres::cli::main(argc, argv); }
