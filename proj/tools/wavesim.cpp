#include "wavesmooth/cli.hpp"

int main(int argc, char** argv) { return wavesmooth::cli::dispatch(argc, argv); }
