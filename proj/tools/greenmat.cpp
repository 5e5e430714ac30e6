// greenmat: compose, gsg, refine, eval and verify subcommands.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "greenmat/commands.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
  std::optional<int> kmeans_k;
  std::optional<double> saturation_distance;
  std::optional<int> smooth_iters;
  std::optional<double> fg_core_threshold;
  std::optional<int> band_radius;
  std::optional<double> min_contrast;
  std::optional<std::string> rgba;
};

greenmat::RunConfig resolve(const Flags& f) {
  greenmat::RunConfig cfg = f.config.empty() ? greenmat::RunConfig{} : greenmat::RunConfig::from_file(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.out) cfg.out = *f.out;
  if (f.kmeans_k) cfg.kmeans_k = *f.kmeans_k;
  if (f.saturation_distance) cfg.refine.saturation_distance = *f.saturation_distance;
  if (f.smooth_iters) cfg.refine.smooth_iters = *f.smooth_iters;
  if (f.fg_core_threshold) cfg.refine.fg_core_threshold = *f.fg_core_threshold;
  if (f.band_radius) cfg.refine.band_radius = *f.band_radius;
  if (f.min_contrast) cfg.refine.min_contrast = *f.min_contrast;
  if (f.rgba) cfg.rgba_out = *f.rgba;
  if (cfg.jobs < 1) throw greenmat::Error("--jobs must be at least 1");
  if (cfg.kmeans_k && *cfg.kmeans_k < 1) throw greenmat::Error("--kmeans-k must be at least 1");
  cfg.refine_params().validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Green-screen matting toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "JSON run config; flags override its values")->check(CLI::ExistingFile);
  app.add_option("--seed", f.seed, "RNG seed (default: $GREENMAT_SEED, else 0)");
  app.add_option("--jobs", f.jobs, "Worker threads for batch commands");
  app.add_option("--out", f.out, "Output file");
  app.add_option("--kmeans-k", f.kmeans_k, "Cluster count (refine default 3, gsg default 5)");
  app.add_option("--saturation-distance", f.saturation_distance, "RGB distance in [0,1] units at which alpha saturates");
  app.add_option("--smooth-iters", f.smooth_iters, "Box-filter passes over the transition band");
  app.add_option("--fg-core-threshold", f.fg_core_threshold, "Coarse alpha above which a pixel may be foreground core");
  app.add_option("--band-radius", f.band_radius, "Width in pixels of the uncertain band around the coarse edge");
  app.add_option("--min-contrast", f.min_contrast, "Foreground/background colour distance below which alpha falls back");

  std::string manifest;
  auto* compose = app.add_subcommand("compose", "Composite foregrounds onto a solid canvas");
  compose->add_option("manifest", manifest, "JSON manifest of {fg, alpha, out, canvas}")->required();

  std::string gsg_dir;
  auto* gsg = app.add_subcommand("gsg", "Green-screen generation score over a directory of PNGs");
  gsg->add_option("dir", gsg_dir)->required();

  std::string image, coarse;
  auto* refine = app.add_subcommand("refine", "Refine a coarse matte against a green backdrop");
  refine->add_option("image", image)->required();
  refine->add_option("coarse", coarse)->required();
  refine->add_option("--rgba", f.rgba, "Also write the image with the refined alpha as RGBA");

  std::string pred_dir, gt_dir;
  auto* eval = app.add_subcommand("eval", "SAD, MSE, Grad and Conn between matching mattes");
  eval->add_option("pred_dir", pred_dir)->required();
  eval->add_option("gt_dir", gt_dir)->required();

  bool json = false, corrupt = false;
  auto* verify = app.add_subcommand("verify", "Gradient checks and oracle comparisons");
  verify->add_flag("--json", json, "Machine-readable output");
  verify->add_flag("--inject-dice-fault", corrupt, "Negative control: corrupt the dice gradient");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : greenmat::kExitUsage;
  }

  greenmat::RunConfig cfg;
  try {
    cfg = resolve(f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return greenmat::kExitUsage;
  }

  try {
    if (*compose) return greenmat::cmd_compose(manifest, cfg, std::cout, std::cerr);
    if (*gsg) return greenmat::cmd_gsg(gsg_dir, cfg, std::cout, std::cerr);
    if (*refine) return greenmat::cmd_refine(image, coarse, cfg, std::cout, std::cerr);
    if (*eval) return greenmat::cmd_eval(pred_dir, gt_dir, cfg, std::cout, std::cerr);
    if (*verify) return greenmat::cmd_verify(cfg, json, corrupt, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return greenmat::kExitFailure;
  }
  return greenmat::kExitUsage;
}
