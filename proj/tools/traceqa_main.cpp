#include "traceqa/cli.hpp"

int main(int argc, char** argv) { return traceqa::dispatch(argc, argv); }
