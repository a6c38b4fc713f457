#include "cli.hpp"

int main(int argc, char** argv) { return sdfm::cli::run(argc, argv); }
