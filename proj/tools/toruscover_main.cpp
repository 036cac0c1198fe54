#include "toruscover/cli.hpp"

int main(int argc, char** argv) { return toruscover::cli::dispatch(argc, argv); }
