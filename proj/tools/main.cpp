#include "cli.hpp"

int main(int argc, char** argv) { return setgen::cli::run(argc, argv); }
