#include "geln/cli.hpp"

int main(int argc, char** argv) { return geln::cli::dispatch(argc, argv); }
