#include "mlsent/cli/cli.hpp"

int main(int argc, char** argv) { return mlsent::cli::run_cli(argc, argv); }
