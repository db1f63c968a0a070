#include "hj/cli.hpp"

int main(int argc, char** argv) { return hj::cli::run_main(argc, argv); }
