// End-to-end acceptance run. Prints one [PASS]/[FAIL] line per criterion and
// exits non-zero if any fails. Tolerances are fixed here, not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "greenmat/greenmat.hpp"
#include "greenmat/testing/fixtures.hpp"
#include "oracles/reference.hpp"
#include "unit/temp_dir.hpp"

using namespace greenmat;
namespace fx = greenmat::testing;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 2024;

constexpr double kRoundTripTol = 1e-5;
constexpr double kRoundTripSeconds = 1.0;
constexpr double kGradientTol = 1e-3;
constexpr double kGradientSeconds = 10.0;
constexpr double kIdentityTol = 1e-6;
constexpr double kOracleTol = 1e-6;
constexpr double kKMeansRelTol = 1e-9;
constexpr double kMatteMse = 0.005;
constexpr double kMatteSad = 0.5;
constexpr double kMatteSeconds = 1.0;
constexpr int kMatteFixtures = 20;
constexpr int kMatteSize = 512;
constexpr double kLinearityTol = 0.02;

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("[%s] AC%d %s: %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void roundtrip() {
  const auto r = check_z0_roundtrip(kSeed, 100);
  // The schedule endpoint is cross-checked against a long-double product.
  const double ab = NoiseSchedule::linear().alpha_bar()[999];
  const double ab_err = std::abs(ab - ref::alpha_bar_product(1000, 1e-4, 0.02, 999)) / ab;
  const bool ok = r.observed <= kRoundTripTol && r.seconds < kRoundTripSeconds && ab_err < 1e-12;
  report(1, ok, "z0 round trip", fmt("max rel err %.2e (tol 1e-5), %.3f s (limit 1 s), alpha_bar[999] rel err %.1e",
                                     r.observed, r.seconds, ab_err));
}

void gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<CheckResult> checks = {check_noise_gradient(kSeed + 1, 5), check_green_gradient(kSeed + 2, 5),
                                           check_detail_gradient(kSeed + 3, 5),
                                           check_latent_gradient(kSeed + 4, 5, false)};
  const double secs = seconds_since(t0);
  double worst = 0.0;
  std::string detail;
  for (const auto& c : checks) {
    worst = std::max(worst, c.observed);
    detail += c.name + " " + fmt("%.1e", c.observed) + "; ";
  }
  report(2, worst <= kGradientTol && secs < kGradientSeconds, "analytic gradients",
         detail + fmt("max %.2e (tol 1e-3), %.2f s (limit 10 s)", worst, secs));
}

void identities() {
  const auto r = check_loss_identities(kSeed + 5);
  report(3, r.observed <= kIdentityTol, "loss identities",
         fmt("worst |loss| at alignment %.2e (tol 1e-6); total equals sum of parts exactly", r.observed));
}

void metric_oracles() {
  const auto r = check_metric_oracles(kSeed + 6, 20);
  // SAD again against an extended-precision sum kept in the test tree.
  Rng rng(kSeed + 60);
  double sad_rel = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto a = fx::random_matte(rng, 16, 16), b = fx::random_matte(rng, 16, 16);
    const double exact = ref::sum_abs_diff_ld(a.data(), b.data());
    sad_rel = std::max(sad_rel, std::abs(sad_raw(a, b) - exact) / exact);
  }
  report(4, r.observed <= kOracleTol && sad_rel < 1e-13, "metric oracles",
         fmt("grad/conn max abs diff %.2e (tol 1e-6), sad/mse bit-exact vs 64-bit sum, sad vs long double %.1e",
             r.observed, sad_rel));
}

void kmeans_optimum() {
  Rng rng(kSeed + 7);
  double worst = 0.0;
  for (int f = 0; f < 10; ++f) {
    const int n = 3 + static_cast<int>(rng.below(6));
    const auto img = fx::random_image(rng, 1, n, 3);
    std::vector<std::array<double, 3>> pts;
    for (int i = 0; i < n; ++i) pts.push_back({img.at(0, i, 0) * 255.0, img.at(0, i, 1) * 255.0, img.at(0, i, 2) * 255.0});
    const double best = ref::best_two_partition(pts).sse;
    Rng krng(kSeed + 100 + f);
    worst = std::max(worst, (kmeans_colors(img, 2, krng).inertia - best) / std::max(1.0, best));
  }
  report(5, worst <= kKMeansRelTol, "k-means optimum",
         fmt("10 fixtures, n<=8, k=2; worst (inertia - optimum) / optimum %.2e (tol 1e-9)", worst));
}

void green_post_roundtrip() {
  Rng rng(kSeed + 8);
  double worst_mse = 0.0, worst_sad = 0.0, worst_secs = 0.0;
  for (int i = 0; i < kMatteFixtures; ++i) {
    const auto f = fx::green_screen_fixture(rng, i, kMatteSize);
    const auto t0 = std::chrono::steady_clock::now();
    const auto alpha = green_post(f.composite, f.coarse);
    worst_secs = std::max(worst_secs, seconds_since(t0));
    worst_mse = std::max(worst_mse, mse(alpha, f.alpha));
    worst_sad = std::max(worst_sad, sad(alpha, f.alpha));
  }
  report(6, worst_mse <= kMatteMse && worst_sad <= kMatteSad && worst_secs < kMatteSeconds, "green_post round trip",
         fmt("20 images 512x512, worst MSE %.2e (tol 5e-3), worst SAD %.3f (tol 0.5), slowest %.3f s (limit 1 s)",
             worst_mse, worst_sad, worst_secs));
}

// Green canvas with a blue object on a quarter of the pixels; the canvas is
// pushed toward red by delta.
Image blended_canvas(double delta) {
  const int size = 64;
  std::vector<float> v(size * size * 3);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      float* p = &v[(y * size + x) * 3];
      if (y >= 16 && y < 48 && x >= 16 && x < 48) {
        p[0] = 0.1f, p[1] = 0.2f, p[2] = 0.9f;
      } else {
        p[0] = static_cast<float>(delta), p[1] = static_cast<float>(1.0 - delta), p[2] = 0.0f;
      }
    }
  }
  return Image(size, size, 3, v);
}

void gsg_monotone() {
  const double green = gsg_score(solid_image(32, 32, kCanvasGreen), {}, kGsgDefaultK, Rng(kSeed));
  const double object_on_green = gsg_score(blended_canvas(0.0), {}, kGsgDefaultK, Rng(kSeed));
  bool ok = green == 0.0 && object_on_green < 1e-9;
  double prev = object_on_green, worst_dev = 0.0;
  for (int i = 1; i <= 9; ++i) {
    const double delta = i / 10.0;
    const double s = gsg_score(blended_canvas(delta), {}, kGsgDefaultK, Rng(kSeed));
    ok = ok && s > prev;
    prev = s;
    const double expected = 255.0 * std::numbers::sqrt2 * delta;
    worst_dev = std::max(worst_dev, std::abs(s - expected) / expected);
  }
  ok = ok && worst_dev <= kLinearityTol;
  report(7, ok, "GSG sanity and monotonicity",
         fmt("pure green %.1e, strictly increasing over delta 0.1..0.9, worst deviation from 255*sqrt2*delta %.2e "
             "(tol 2e-2)",
             green, worst_dev));
}

void determinism() {
  TempDir dir("acceptance");
  fs::create_directories(dir / "imgs");
  Rng rng(kSeed + 9);
  nlohmann::json manifest = nlohmann::json::array();
  for (int i = 0; i < 6; ++i) {
    const auto f = fx::green_screen_fixture(rng, i, 128);
    const std::string name = "img" + std::to_string(i) + ".png";
    save_png(dir / "imgs" / name, f.composite);
    save_png(dir / ("coarse" + std::to_string(i) + ".png"), f.coarse);
    save_png(dir / ("alpha" + std::to_string(i) + ".png"), f.alpha);
    manifest.push_back({{"fg", "imgs/" + name}, {"alpha", "alpha" + std::to_string(i) + ".png"},
                        {"out", "c1/" + std::to_string(i) + ".png"}});
  }
  std::ostringstream sink;
  bool ok = true;

  auto gsg = [&](int jobs, const std::string& out) {
    RunConfig cfg;
    cfg.seed = kSeed;
    cfg.jobs = jobs;
    cfg.out = dir / out;
    ok = ok && cmd_gsg(dir / "imgs", cfg, sink, sink) == kExitOk;
    return slurp(cfg.out);
  };
  const auto g1 = gsg(1, "gsg_a.json"), g2 = gsg(1, "gsg_b.json"), g4 = gsg(4, "gsg_c.json");
  const bool gsg_same = !g1.empty() && g1 == g2 && g1 == g4;

  auto refine = [&](const std::string& out) {
    RunConfig cfg;
    cfg.seed = kSeed;
    cfg.out = dir / out;
    ok = ok && cmd_refine(dir / "imgs/img1.png", dir / "coarse1.png", cfg, sink, sink) == kExitOk;
    return slurp(cfg.out);
  };
  const auto r1 = refine("r1.png"), r2 = refine("r2.png");
  const bool refine_same = !r1.empty() && r1 == r2;

  auto compose = [&](int jobs, const std::string& sub) {
    auto m = manifest;
    for (auto& item : m) item["out"] = sub + "/" + item["out"].get<std::string>().substr(3);
    std::ofstream(dir / (sub + ".json")) << m.dump();
    RunConfig cfg;
    cfg.jobs = jobs;
    ok = ok && cmd_compose(dir / (sub + ".json"), cfg, sink, sink) == kExitOk;
    std::string all;
    for (int i = 0; i < 6; ++i) all += slurp(dir / sub / (std::to_string(i) + ".png"));
    return all;
  };
  const bool compose_same = compose(1, "serial") == compose(4, "parallel");

  report(8, ok && gsg_same && refine_same && compose_same, "determinism",
         std::string("gsg rerun and --jobs 4 ") + (gsg_same ? "identical" : "DIFFER") + ", refine rerun " +
             (refine_same ? "identical" : "DIFFER") + ", compose --jobs 1 vs 4 " +
             (compose_same ? "identical" : "DIFFER"));
}

void gsg_definition() {
  // Published scores need generated image sets and trained models that are
  // not available here; what can be checked is the score definition itself:
  // distance from the dominant colour to reference green in 0..255 RGB.
  std::vector<float> v;
  const std::array<float, 3> major{0.2f, 0.8f, 0.1f}, minor{0.9f, 0.1f, 0.6f};
  for (int i = 0; i < 100; ++i) v.insert(v.end(), (i < 70 ? major : minor).begin(), (i < 70 ? major : minor).end());
  const double got = gsg_score(Image(10, 10, 3, v), {}, 2, Rng(kSeed));
  const double dr = major[0] * 255.0, dg = major[1] * 255.0 - 255.0, db = major[2] * 255.0;
  const double expected = std::sqrt(dr * dr + dg * dg + db * db);
  report(9, std::abs(got - expected) < 1e-9, "GSG definition (model-scale results not reproducible here)",
         fmt("dominant-colour distance %.6f vs hand computation %.6f", got, expected));
}

}  // namespace

int main() {
  roundtrip();
  gradients();
  identities();
  metric_oracles();
  kmeans_optimum();
  green_post_roundtrip();
  gsg_monotone();
  determinism();
  gsg_definition();
  std::printf("%s (%d failing)\n", failures == 0 ? "all criteria passed" : "SOME CRITERIA FAILED", failures);
  return failures == 0 ? 0 : 1;
}
