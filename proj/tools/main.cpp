#include "nc/pipeline.hpp"

int main(int argc, char** argv) { return nc::run_cli(argc, argv); }
