#include "rfg/app/commands.hpp"

int main(int argc, char** argv) { return rfg::app::cli_main(argc, argv); }
