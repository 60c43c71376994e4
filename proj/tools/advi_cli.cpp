#include <advi/cli.hpp>

int main(int argc, char** argv) { return advi::cli_main(argc, argv); }
