#include <csignal>
#include <iostream>

#include "csocnn_cli/cli.hpp"

namespace {

extern "C" void on_signal(int) { csocnn::cli::request_interrupt(); }

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  return csocnn::cli::run(std::vector<std::string>(argv, argv + argc), std::cin, std::cout,
                          std::cerr);
}
