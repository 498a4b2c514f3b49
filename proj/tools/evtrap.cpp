#include <iostream>

#include "evtrap/commands.hpp"

int main(int argc, char** argv) { return evtrap::run_cli(argc, argv, std::cout, std::cerr); }
