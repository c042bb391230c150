#include "mpemba/cli.hpp"

int main(int argc, char** argv) { return mpemba::cli::run(argc, argv); }
