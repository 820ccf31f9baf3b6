#include "errlab/cli.hpp"

int main(int argc, char** argv) { return errlab::run_main(argc, argv); }
