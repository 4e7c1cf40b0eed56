#include "tracelab/lab.hpp"

int main(int argc, char** argv) { return tracelab::cli_main(argc, argv); }
