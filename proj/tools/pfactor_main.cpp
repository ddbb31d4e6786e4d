#include "preg/cli.hpp"

int main(int argc, char** argv) { return preg::cli::main_entry(argc, argv); }
