#include "spcp/cli.hpp"

int main(int argc, char** argv) { return spcp::cli_main(argc, argv); }
