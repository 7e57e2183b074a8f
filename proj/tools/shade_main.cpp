#include "shade/toolkit.hpp"

int main(int argc, char** argv) { return shade::cli_main(argc, argv); }
