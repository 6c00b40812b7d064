#include "ccat/cli.hpp"

int main(int argc, char** argv) { return ccat::cli::run(argc, argv); }
