#include "fairegm/cli.hpp"

int main(int argc, char** argv) { return fairegm::cli::main(argc, argv); }
