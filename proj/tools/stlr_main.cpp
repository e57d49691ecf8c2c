#include "stlr/cli.hpp"

int main(int argc, char** argv) { return stlr::run_main(argc, argv); }
