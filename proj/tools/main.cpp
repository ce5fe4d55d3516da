#include "satrach/cli_app.hpp"

int main(int argc, char** argv) { return satrach::cli_main(argc, argv); }
