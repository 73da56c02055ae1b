#include "commands.hpp"

int main(int argc, char** argv) { return lane3d::tools::run_cli(argc, argv); }
