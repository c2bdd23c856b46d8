#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "csocnn/error.hpp"

namespace csocnn::cli {

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Options {
  std::optional<std::string> data;
  bool synthetic = false;
  std::size_t samples = 10000;
  double separation = 6.0;
  std::string label_column = "Label";
  std::vector<std::string> ignore_columns;
  std::size_t features = 75;

  std::optional<std::uint64_t> seed;
  std::string out = "csocnn-out";
  bool quiet = false;

  std::size_t epochs = 5;
  std::size_t batch = 640;
  double lr = 1e-3;

  std::size_t cats = 4;
  std::size_t iters = 3;
  double mr = 0.3;
  std::size_t smp = 5;
  double srd = 0.2;
  double cdc = 0.8;
  double c1 = 2.0;
  std::size_t workers = 1;

  std::optional<std::string> model;
  std::string split = "test";
  std::string input = "-";
  double threshold = 0.5;
  std::string score_kind = "non_benign_mass";
  std::optional<std::string> calibrate;
  std::optional<std::string> benign_class;
  std::optional<std::string> scaler;
};

struct Io {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

int cmd_train(const Options& o, Io io);
int cmd_optimize(const Options& o, Io io);
int cmd_evaluate(const Options& o, Io io);
int cmd_detect(const Options& o, Io io);

}  // namespace csocnn::cli
