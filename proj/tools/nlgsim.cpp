#include "nlgsim/cli.hpp"

int main(int argc, char** argv) { return nlgsim::cli::main(argc, argv); }
