#include <string>
#include <vector>

#include "planforge/cli.hpp"

int main(int argc, char** argv) {
  return planforge::execute(std::vector<std::string>(argv + 1, argv + argc));
}
