#include "cli/app.hpp"

int main(int argc, char** argv) { return blockshrink::cli::dispatch(argc, argv); }
