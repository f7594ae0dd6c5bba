#include "cauchy/cli.hpp"

int main(int argc, char** argv) { return cauchy::cli_main(argc, argv); }
