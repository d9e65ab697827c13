#include "rsea/cli.hpp"

int main(int argc, char** argv) { return rsea::cli::run(argc, argv); }
