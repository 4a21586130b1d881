#include <iostream>

#include <CLI11.hpp>

#include "jointslu/data.hpp"
#include "jointslu/errors.hpp"
#include "jointslu/synthetic.hpp"

// Writes the fixed-seed synthetic corpus in the three-file dataset format.
int main(int argc, char** argv) {
  jointslu::SyntheticOptions options;
  std::string out_dir;

  CLI::App app{"synthetic joint intent/slot corpus generator"};
  app.add_option("--out", out_dir, "output dataset directory")->required();
  app.add_option("--seed", options.seed);
  app.add_option("--language", options.language);
  app.add_option("--sentences", options.sentences);
  app.add_option("--train", options.train);
  app.add_option("--valid", options.valid);
  app.add_option("--test", options.test);
  CLI11_PARSE(app, argc, argv);

  try {
    const jointslu::DatasetSplit split = jointslu::make_synthetic_corpus(options);
    jointslu::write_dataset(split, out_dir);
    std::cerr << "wrote " << split.train.size() << "/" << split.valid.size() << "/"
              << split.test.size() << " sentences to " << out_dir << '\n';
  } catch (const jointslu::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
