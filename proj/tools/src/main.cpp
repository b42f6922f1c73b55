#include "cli_app.hpp"

int main(int argc, char** argv) { return cogtools::cli::run(argc, argv); }
