#include "skybatch/cli.hpp"

int main(int argc, char** argv) { return skybatch::cli::run_main(argc, argv); }
