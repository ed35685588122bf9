#include "medpost/commands.hpp"

int main(int argc, char** argv) { return medpost::run_cli(argc, argv); }
