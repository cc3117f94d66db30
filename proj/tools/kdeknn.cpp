#include "kdeknn/cli/commands.hpp"

int main(int argc, char** argv) { return kdeknn::cli::run(argc, argv); }
