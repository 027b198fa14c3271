#include "coxscreen/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return coxscreen::run_cli(argc, argv, std::cout, std::cerr);
}
