// gen_corpus: writes a random corpus and edit script for `strata bench`.
#include <CLI11.hpp>

#include <iostream>

#include "corpus.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a Strata corpus and edit script"};
  int modules = 50, defs = 8, steps = 50;
  unsigned seed = 1;
  std::string out;
  app.add_option("--modules", modules, "Generated modules besides main")->check(CLI::PositiveNumber);
  app.add_option("--defs", defs, "Definitions per module")->check(CLI::Range(2, 1000));
  app.add_option("--steps", steps, "Edit script length")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "RNG seed");
  app.add_option("--out", out, "Writes <out>/src and <out>/script")->required();
  CLI11_PARSE(app, argc, argv);

  strata::testing::CorpusGen gen(modules, defs, seed);
  std::filesystem::path dir(out);
  gen.write(dir / "src");
  int total = gen.definition_count();
  strata::bench::write_script(dir / "script", gen.edit_script(steps));
  std::cout << "main module: " << gen.main_module() << "; " << total << " definitions; " << steps << " steps\n";
  return 0;
}
