// Pure-noise calibration of the block constant d: fraction of detail blocks
// kept when f = 0, so every kept block is a false positive.
#include <cstdio>
#include <vector>

#include "CLI11.hpp"

#include "blockshrink/blockshrink.hpp"

int main(int argc, char** argv) {
  using namespace blockshrink;
  std::size_t n = 4096;
  std::size_t replications = 500;
  std::uint64_t seed = 7;
  unsigned threads = 1;
  std::vector<double> ds{1, 2, 3, 4, 5, 6, 8};
  CLI::App app{"False-keep rate of the block rule on pure noise", "calibrate_threshold"};
  app.add_option("--n", n)->capture_default_str();
  app.add_option("--replications", replications)->capture_default_str();
  app.add_option("--seed", seed)->capture_default_str();
  app.add_option("--threads", threads)->capture_default_str();
  app.add_option("--d", ds, "Constants to sweep");
  CLI11_PARSE(app, argc, argv);

  const auto basis = make_basis(WaveletFamily::haar);
  const auto density = DesignDensity::uniform();
  const auto grid = block_grid(n, 2.0, basis.tau());
  const RegressionFunction zero = [](double) { return 0.0; };
  std::vector<CoefficientTree> trees(replications);
  parallel_for(replications, threads, [&](std::size_t rep) {
    const auto sample = generate_sample(zero, density, n, replication_seed(seed, n, rep), NoiseModel::gaussian);
    trees[rep] = empirical_coefficients(sample, density, basis, grid);
  });

  std::printf("n=%zu p=2 haar uniform R=%zu levels %d..%d L=%lld\n", n, replications, grid.j1, grid.j2,
              static_cast<long long>(grid.L));
  std::printf("%6s %14s %14s\n", "d", "false_keep", "any_kept");
  for (double d : ds) {
    std::size_t kept = 0, total = 0, any = 0;
    for (const auto& tree : trees) {
      const auto est = apply_blockshrink(tree, grid, d, basis.family());
      bool hit = false;
      for (const auto& dec : est.decisions) {
        kept += dec.kept;
        hit = hit || dec.kept;
        ++total;
      }
      any += hit;
    }
    std::printf("%6.2f %14.6f %14.6f\n", d, static_cast<double>(kept) / static_cast<double>(total),
                static_cast<double>(any) / static_cast<double>(replications));
  }
  return 0;
}
