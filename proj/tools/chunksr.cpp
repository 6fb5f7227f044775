#include "chunksr/cli_commands.hpp"

int main(int argc, char** argv) {
    return chunksr::cli::main_cli(argc, argv);
}
