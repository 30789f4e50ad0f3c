#include "minn/cli.hpp"

int main(int argc, char** argv) { return minn::cli::run(argc, argv); }
