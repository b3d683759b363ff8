#include <dvwalk/cli.hpp>

int main(int argc, char** argv) { return dvwalk::cli::run(argc, argv); }
