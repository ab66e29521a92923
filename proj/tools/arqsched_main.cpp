#include "arqsched/cli.hpp"

int main(int argc, char** argv) { return arqsched::run_cli(argc, argv); }
