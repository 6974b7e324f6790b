#include <string>
#include <vector>

#include "faceflow/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return faceflow::cli::run(args);
}
