#include <string>
#include <vector>

#include "rimle/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rimle::cli::run(args);
}
