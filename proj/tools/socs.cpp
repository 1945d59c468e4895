#include <csignal>
#include <iostream>

#include "socs/cli.hpp"

namespace {
std::atomic<bool> interrupted{false};
}

int main(int argc, char** argv) {
  std::signal(SIGINT, [](int) { interrupted = true; });
  std::signal(SIGTERM, [](int) { interrupted = true; });
  return socs::cli::run(argc, argv, std::cout, std::cerr, &interrupted);
}
