// synthetic flow-record generator, for demos and quick experiments

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "autoids/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"autoids-datagen: write a synthetic labeled flow-record CSV"};

  std::string output;
  std::vector<std::size_t> class_counts;
  autoids::SyntheticSpec spec;

  app.add_option("--output", output, "output CSV path")->required();
  app.add_option("--class-counts", class_counts, "rows per class (up to 7 classes)");
  app.add_option("--features", spec.n_features, "feature column count");
  auto* informative = app.add_option("--informative", spec.n_informative, "informative column count");
  app.add_option("--separation", spec.separation, "cluster separation scale");
  app.add_option("--dirty-rate", spec.dirty_cell_rate, "fraction of nan/inf/empty cells");
  app.add_option("--seed", spec.seed, "generator seed");

  CLI11_PARSE(app, argc, argv);
  if (!class_counts.empty()) spec.class_counts = class_counts;
  if (informative->count() == 0 && spec.n_informative > spec.n_features)
    spec.n_informative = std::max<std::size_t>(1, spec.n_features * 2 / 5);

  try {
    autoids::write_synthetic_csv(output, spec);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::size_t total = 0;
  for (const std::size_t c : spec.class_counts) total += c;
  std::cout << total << " rows, " << spec.n_features << " features, " << spec.class_counts.size()
            << " classes written to " << output << "\n";
  return 0;
}
