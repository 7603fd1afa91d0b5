#include "commands.hpp"

int main(int argc, char** argv) { return dfsmem::cli::run(argc, argv); }
