#include "cli.hpp"

int main(int argc, char** argv) { return ldw::cli::run(argc, argv); }
