#include <string>
#include <vector>

#include "halluest/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return halluest::cli::dispatch(args);
}
