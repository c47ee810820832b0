#include <singlab/cli.hpp>

int main(int argc, char** argv) { return singlab::run_cli(argc, argv); }
