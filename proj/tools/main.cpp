#include <iostream>

#include "carbosound/cli.hpp"

int main(int argc, char** argv) { return carbosound::run(argc, argv, std::cout, std::cerr); }
