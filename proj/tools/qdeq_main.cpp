#include "qdeq/cli.hpp"

int main(int argc, char** argv) { return qdeq::cli::run(argc, argv); }
