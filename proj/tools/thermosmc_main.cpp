#include <iostream>

#include "thermosmc/app/cli.hpp"

int main(int argc, char** argv) { return thermosmc::app::run_cli(argc, argv, std::cout, std::cerr); }
