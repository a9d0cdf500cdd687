#include "dynasty/cli.hpp"

int main(int argc, char** argv) { return dynasty::run_cli(argc, argv); }
