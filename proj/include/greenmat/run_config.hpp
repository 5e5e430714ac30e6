#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "greenmat/greenpost.hpp"
#include "greenmat/metrics.hpp"
#include "greenmat/tensor_io.hpp"

namespace greenmat {

/// Parameters shared by every subcommand. Unset optionals fall back to the
/// per-command default (k = 3 for refinement, 5 for GSG).
struct RunConfig {
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::filesystem::path out;
  std::optional<int> kmeans_k;
  RefineParams refine;
  Rgb reference{0.0, 255.0, 0.0};
  MetricParams metrics;
  std::filesystem::path rgba_out;

  /// Explicit seed, else $GREENMAT_SEED, else 0.
  std::uint64_t resolved_seed() const {
    if (seed) return *seed;
    if (const char* env = std::getenv("GREENMAT_SEED"); env && *env) {
      try {
        return std::stoull(env);
      } catch (const std::exception&) {
        throw Error(std::string("GREENMAT_SEED is not an unsigned integer: ") + env);
      }
    }
    return 0;
  }

  RefineParams refine_params() const {
    RefineParams p = refine;
    p.seed = resolved_seed();
    p.kmeans_k = kmeans_k.value_or(kBackgroundDefaultK);
    return p;
  }

  int gsg_k() const { return kmeans_k.value_or(kGsgDefaultK); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    if (seed) j["seed"] = *seed;
    j["jobs"] = jobs;
    if (!out.empty()) j["out"] = out.string();
    if (kmeans_k) j["kmeans_k"] = *kmeans_k;
    j["saturation_distance"] = refine.saturation_distance;
    j["smooth_iters"] = refine.smooth_iters;
    j["fg_core_threshold"] = refine.fg_core_threshold;
    j["band_radius"] = refine.band_radius;
    j["min_contrast"] = refine.min_contrast;
    j["reference"] = {reference.r, reference.g, reference.b};
    j["sigma"] = metrics.sigma;
    j["conn_step"] = metrics.conn_step;
    if (!rgba_out.empty()) j["rgba"] = rgba_out.string();
    return j;
  }

  /// Overlays every key present in `j` onto this config.
  void apply_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error("config: expected a JSON object");
    if (j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("jobs")) jobs = j.at("jobs").get<int>();
    if (j.contains("out")) out = j.at("out").get<std::string>();
    if (j.contains("kmeans_k")) kmeans_k = j.at("kmeans_k").get<int>();
    if (j.contains("saturation_distance")) refine.saturation_distance = j.at("saturation_distance").get<double>();
    if (j.contains("smooth_iters")) refine.smooth_iters = j.at("smooth_iters").get<int>();
    if (j.contains("fg_core_threshold")) refine.fg_core_threshold = j.at("fg_core_threshold").get<double>();
    if (j.contains("band_radius")) refine.band_radius = j.at("band_radius").get<int>();
    if (j.contains("min_contrast")) refine.min_contrast = j.at("min_contrast").get<double>();
    if (j.contains("reference")) {
      const auto& r = j.at("reference");
      if (!r.is_array() || r.size() != 3) throw Error("config: reference must be [r, g, b]");
      reference = {r[0].get<double>(), r[1].get<double>(), r[2].get<double>()};
    }
    if (j.contains("sigma")) metrics.sigma = j.at("sigma").get<double>();
    if (j.contains("conn_step")) metrics.conn_step = j.at("conn_step").get<double>();
    if (j.contains("rgba")) rgba_out = j.at("rgba").get<std::string>();
  }

  static RunConfig from_file(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    RunConfig c;
    try {
      c.apply_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
    } catch (const nlohmann::json::exception& e) {
      throw Error(path.string() + ": " + e.what());
    }
    return c;
  }
};

}  // namespace greenmat
