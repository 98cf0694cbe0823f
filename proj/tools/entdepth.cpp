#include "entdepth/cli.hpp"

int main(int argc, char** argv) { return entdepth::cli::run(argc, argv); }
