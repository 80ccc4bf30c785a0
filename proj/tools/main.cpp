#include "casekg/pipeline/cli.hpp"

int main(int argc, char** argv) { return casekg::pipeline::run_cli(argc, argv); }
