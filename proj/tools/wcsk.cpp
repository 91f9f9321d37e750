#include "wcsk/cli.hpp"

int main(int argc, char** argv) { return wcsk::cli_main(argc, argv); }
