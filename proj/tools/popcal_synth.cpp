// popcal-synth: deterministic corpus generator for exercising the toolkit
// without the original datasets. The ml1m flavor matches MovieLens 1M
// marginals (rating counts, catalog size, head concentration); the lastfm
// flavor produces a play-count log whose post-pipeline statistics match the
// published album corpus.

#include <CLI11.hpp>
#include <iostream>

#include "popcal/common.hpp"
#include "popcal/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"synthetic corpus generator"};
  std::string flavor = "ml1m";
  std::string out;
  std::uint64_t seed = 7;
  double scale = 1.0;
  app.add_option("--flavor", flavor, "ml1m | lastfm")->required();
  app.add_option("--out", out, "output file")->required();
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--scale", scale, "shrink factor in (0,1] for test corpora");

  try {
    app.parse(argc, argv);
    if (!(scale > 0.0 && scale <= 1.0))
      throw popcal::UsageError("--scale must be in (0,1]");
    if (flavor == "ml1m") {
      popcal::MovieLensSynthConfig cfg;
      cfg.seed = seed;
      if (scale < 1.0) cfg = cfg.scaled(scale);
      popcal::synth_movielens(out, cfg);
    } else if (flavor == "lastfm") {
      popcal::PlayCountSynthConfig cfg;
      cfg.seed = seed;
      if (scale < 1.0) cfg = cfg.scaled(scale);
      popcal::synth_playcounts(out, cfg);
    } else {
      throw popcal::UsageError("unknown flavor: " + flavor);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const popcal::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
