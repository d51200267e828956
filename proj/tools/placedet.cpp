#include <string>
#include <vector>

#include "placedet/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return placedet::cli::run(std::move(args));
}
