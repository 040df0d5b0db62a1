#include <iostream>

#include "tusnady/commands.hpp"

int main(int argc, char** argv) { return tusnady::run_cli(argc, argv, std::cout, std::cerr); }
