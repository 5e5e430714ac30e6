#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "greenmat/composer.hpp"
#include "greenmat/greenpost.hpp"
#include "greenmat/metrics.hpp"
#include "greenmat/png_io.hpp"
#include "greenmat/run_config.hpp"
#include "greenmat/verify.hpp"

namespace greenmat {

// Subcommand bodies of the greenmat tool. Each returns the process exit code
// (0 ok, 1 item failures) and writes human output to `out`, problems to `err`.

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Items are independent
/// and results are written by index, so the outcome does not depend on jobs.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

namespace commands_detail {

inline std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

struct ItemOutcome {
  bool ok = false;
  std::string message;
};

}  // namespace commands_detail

/// Manifest: [{"fg": path, "alpha": path, "out": path, "canvas": [r, g, b]}],
/// relative paths resolved against the manifest's directory, canvas in unit
/// RGB (green when omitted).
inline int cmd_compose(const std::filesystem::path& manifest_path, const RunConfig& cfg, std::ostream& out,
                       std::ostream& err) {
  nlohmann::json manifest;
  try {
    const auto bytes = read_file_bytes(manifest_path);
    manifest = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const std::exception& e) {
    err << "error: " << manifest_path.string() << ": " << e.what() << "\n";
    return kExitFailure;
  }
  if (!manifest.is_array()) {
    err << "error: " << manifest_path.string() << ": manifest must be a JSON array\n";
    return kExitFailure;
  }
  if (manifest.empty()) {
    err << "warning: manifest is empty, nothing to compose\n";
    return kExitOk;
  }
  const auto base = manifest_path.parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };

  std::vector<commands_detail::ItemOutcome> outcomes(manifest.size());
  parallel_for(manifest.size(), cfg.jobs, [&](std::size_t i) {
    auto& o = outcomes[i];
    std::string where = "item " + std::to_string(i);
    try {
      const auto& item = manifest.at(i);
      const auto fg_path = resolve(item.at("fg").get<std::string>());
      const auto alpha_path = resolve(item.at("alpha").get<std::string>());
      const auto out_path = resolve(item.at("out").get<std::string>());
      Rgb canvas = kCanvasGreen;
      if (item.contains("canvas")) {
        const auto& c = item.at("canvas");
        if (!c.is_array() || c.size() != 3) throw Error("canvas must be [r, g, b]");
        canvas = {c[0].get<double>(), c[1].get<double>(), c[2].get<double>()};
      }
      where = fg_path.string();
      const Image fg = load_png(fg_path, 3);
      where = alpha_path.string();
      const AlphaMatte alpha = load_matte_png(alpha_path);
      where = fg_path.string() + " + " + alpha_path.string();
      const Image composite = composite_on_green(fg, alpha, canvas);
      where = out_path.string();
      if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
      save_png(out_path, composite);
      o = {true, out_path.string()};
    } catch (const std::exception& e) {
      o = {false, where + ": " + e.what()};
    }
  });

  int failures = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].ok) {
      out << "ok    [" << i << "] " << outcomes[i].message << "\n";
    } else {
      err << "error [" << i << "] " << outcomes[i].message << "\n";
      ++failures;
    }
  }
  out << "composed " << (outcomes.size() - failures) << "/" << outcomes.size() << "\n";
  return failures == 0 ? kExitOk : kExitFailure;
}

/// GSG over every PNG in `dir`: {"per_image": [{name, gsg}], "mean": ...}.
/// Each image is clustered with a fresh Rng(seed), so results are
/// independent of ordering and worker count.
inline nlohmann::json gsg_report(const std::filesystem::path& dir, const RunConfig& cfg, std::vector<std::string>& errors) {
  const auto files = commands_detail::list_pngs(dir);
  if (files.empty()) throw Error("no PNG images in " + dir.string());
  const GreenReference ref(cfg.reference);
  const std::uint64_t seed = cfg.resolved_seed();
  const int k = cfg.gsg_k();
  std::vector<double> scores(files.size(), 0.0);
  std::vector<std::string> failures(files.size());
  parallel_for(files.size(), cfg.jobs, [&](std::size_t i) {
    try {
      scores[i] = gsg_score(load_png(files[i], 3), ref, k, Rng(seed));
    } catch (const std::exception& e) {
      failures[i] = files[i].string() + ": " + e.what();
    }
  });

  nlohmann::json report;
  report["per_image"] = nlohmann::json::array();
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (!failures[i].empty()) {
      errors.push_back(failures[i]);
      continue;
    }
    report["per_image"].push_back({{"name", files[i].filename().string()}, {"gsg", scores[i]}});
    sum += scores[i];
    ++counted;
  }
  report["mean"] = counted ? sum / static_cast<double>(counted) : 0.0;
  report["k"] = k;
  report["seed"] = seed;
  report["reference"] = {ref.rgb.r, ref.rgb.g, ref.rgb.b};
  return report;
}

inline int cmd_gsg(const std::filesystem::path& dir, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::vector<std::string> errors;
  nlohmann::json report;
  try {
    report = gsg_report(dir, cfg, errors);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  for (const auto& e : errors) err << "error: " << e << "\n";
  const std::string text = report.dump(2) + "\n";
  if (cfg.out.empty()) {
    out << text;
  } else {
    try {
      commands_detail::write_text(cfg.out, text);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitFailure;
    }
    out << "mean GSG " << report["mean"].get<double>() << " over " << report["per_image"].size() << " images -> "
        << cfg.out.string() << "\n";
  }
  return errors.empty() ? kExitOk : kExitFailure;
}

inline int cmd_refine(const std::filesystem::path& image_path, const std::filesystem::path& coarse_path,
                      const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.out.empty()) {
    err << "error: refine needs --out <matte.png>\n";
    return kExitUsage;
  }
  try {
    const Image img = load_png(image_path, 3);
    const AlphaMatte coarse = load_matte_png(coarse_path);
    const RefineResult r = green_post_detailed(img, coarse, cfg.refine_params());
    save_png(cfg.out, r.alpha);
    if (!cfg.rgba_out.empty()) save_png(cfg.rgba_out, to_rgba(img, r.alpha));
    out << "refined " << image_path.string() << " -> " << cfg.out.string() << "\n";
    if (r.low_contrast_pixels > 0) {
      err << "warning: " << r.low_contrast_pixels
          << " band pixels have a foreground colour indistinguishable from the canvas; alpha there is unreliable\n";
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

/// Matches files by name across the two directories.
inline int cmd_eval(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir, const RunConfig& cfg,
                    std::ostream& out, std::ostream& err) {
  std::vector<std::filesystem::path> preds, gts;
  try {
    preds = commands_detail::list_pngs(pred_dir);
    gts = commands_detail::list_pngs(gt_dir);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  std::set<std::string> pn, gn;
  for (const auto& p : preds) pn.insert(p.filename().string());
  for (const auto& g : gts) gn.insert(g.filename().string());
  if (pn != gn) {
    err << "error: prediction and ground-truth file sets differ\n";
    for (const auto& n : pn)
      if (!gn.count(n)) err << "  only in " << pred_dir.string() << ": " << n << "\n";
    for (const auto& n : gn)
      if (!pn.count(n)) err << "  only in " << gt_dir.string() << ": " << n << "\n";
    return kExitFailure;
  }
  if (preds.empty()) {
    err << "error: no PNG mattes in " << pred_dir.string() << "\n";
    return kExitFailure;
  }

  std::vector<ImageMetrics> items(preds.size());
  std::vector<std::string> failures(preds.size());
  parallel_for(preds.size(), cfg.jobs, [&](std::size_t i) {
    const std::string name = preds[i].filename().string();
    try {
      items[i] = evaluate_pair(name, load_matte_png(preds[i]), load_matte_png(gt_dir / name), cfg.metrics);
    } catch (const std::exception& e) {
      failures[i] = name + ": " + e.what();
    }
  });
  std::vector<ImageMetrics> ok;
  int bad = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (failures[i].empty()) {
      ok.push_back(std::move(items[i]));
    } else {
      err << "error: " << failures[i] << "\n";
      ++bad;
    }
  }
  const auto report = MetricsReport::from(std::move(ok));
  out << report.to_table();
  if (!cfg.out.empty()) {
    try {
      commands_detail::write_text(cfg.out, report.to_json().dump(2) + "\n");
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitFailure;
    }
  }
  return bad == 0 ? kExitOk : kExitFailure;
}

inline int cmd_verify(const RunConfig& cfg, bool json, bool corrupt_dice_gradient, std::ostream& out) {
  VerifyOptions opt;
  opt.seed = cfg.resolved_seed();
  opt.corrupt_dice_gradient = corrupt_dice_gradient;
  const auto results = run_verification(opt);
  bool all = true;
  for (const auto& r : results) all = all && r.passed;
  if (json) {
    out << to_json(results).dump(2) << "\n";
  } else {
    char line[256];
    for (const auto& r : results) {
      std::snprintf(line, sizeof line, "%s  %-40s tol %-8.1e observed %.3e  (%.3fs)\n", r.passed ? "PASS" : "FAIL",
                    r.name.c_str(), r.tolerance, r.observed, r.seconds);
      out << line;
    }
    out << (all ? "all checks passed" : "verification FAILED") << "\n";
  }
  return all ? kExitOk : kExitFailure;
}

}  // namespace greenmat
