#include "commands.hpp"

int main(int argc, char** argv) { return chfkit::cli::run(argc, argv); }
