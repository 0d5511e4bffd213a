#include "hkb/cli_app.hpp"

int main(int argc, char** argv) { return hkb::cli::run_cli(argc, argv); }
