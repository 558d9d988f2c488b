#include <string>
#include <vector>

#include "sid/cli.hpp"

int main(int argc, char** argv) {
  return sid::run_command(std::vector<std::string>(argv, argv + argc));
}
