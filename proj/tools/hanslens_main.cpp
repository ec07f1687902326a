#include "hanslens/cli.hpp"

int main(int argc, char** argv) { return hanslens::cli::run(argc, argv); }
