#include "opml/cli.hpp"

int main(int argc, char** argv) {
    return opml::cli::run({argv + 1, argv + argc});
}
