#include "twas/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return twas::cli::dispatch(argc, argv, std::cout, std::cerr);
}
