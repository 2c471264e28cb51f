#include <iostream>

#include "muxlink/commands.hpp"

int main(int argc, char** argv) { return muxlink::run_cli(argc, argv, std::cout, std::cerr); }
