#include "rostcli/cli.hpp"

int main(int argc, char** argv) { return rostcli::run(argc, argv); }
