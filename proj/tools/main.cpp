#include <iostream>
#include <string>
#include <vector>

#include "liouville/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return liouville::app::run(args, std::cout, std::cerr);
}
