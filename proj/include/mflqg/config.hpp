#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mflqg/model.hpp"

namespace mflqg {

// Config files are JSON objects (comments allowed). Time-varying coefficients
// are a number or an array of samples spread uniformly over [0, T]:
//
//   { "mode": "pf", "T": 1.0, "M": 200, "x": 1.0, "alpha": 0.5, "G": 0.5,
//     "A": 0.2, "B": 1.0, "m": [0.0, 0.4], "sigma": 0.5, "sigma_tilde": 0.3,
//     "Q": 1.0, "R": 1.0, "N": 64, "reps": 100, "seed": 7 }
inline ModelSpec parse_model_spec(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config does not parse: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  ModelSpec spec;
  auto number = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key)) return std::nullopt;
    if (!j[key].is_number()) throw ConfigError(std::string("expected a number for ") + key);
    return j[key].get<double>();
  };
  auto integer = [&](const char* key) -> std::optional<long long> {
    if (!j.contains(key)) return std::nullopt;
    if (!j[key].is_number_integer()) throw ConfigError(std::string("expected an integer for ") + key);
    return j[key].get<long long>();
  };

  if (auto T = number("T")) spec.horizon = *T;
  if (auto M = integer("M")) spec.steps = static_cast<int>(*M);
  spec.alpha = number("alpha");
  spec.G = number("G");
  spec.x = number("x");
  if (auto f = number("R_floor")) spec.r_floor = *f;
  if (auto n = integer("N")) spec.population.agents = static_cast<int>(*n);
  if (auto r = integer("reps")) spec.population.reps = static_cast<int>(*r);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) throw ConfigError("expected an integer seed");
    spec.population.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("mode")) {
    const auto mode = j["mode"].get<std::string>();
    if (mode == "pf" || mode == "PartialFiltration") {
      spec.population.mode = InfoMode::PartialFiltration;
    } else if (mode == "po" || mode == "PartialObservation") {
      spec.population.mode = InfoMode::PartialObservation;
    } else {
      throw ConfigError("unknown mode: " + mode);
    }
  }
  if (j.contains("po_common_noise_feed")) {
    const auto feed = j["po_common_noise_feed"].get<std::string>();
    if (feed == "off") {
      spec.population.feed = CommonNoiseFeed::Off;
    } else if (feed == "gain") {
      spec.population.feed = CommonNoiseFeed::FilterGain;
    } else {
      throw ConfigError("unknown po_common_noise_feed: " + feed);
    }
  }

  static const char* kReserved[] = {"T", "M", "alpha", "G", "x", "R_floor", "N", "reps",
                                    "seed", "mode", "po_common_noise_feed"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (std::find(std::begin(kReserved), std::end(kReserved), key) != std::end(kReserved)) continue;
    if (!coef_from_name(key)) throw ConfigError("unknown key: " + key);
    if (it->is_number()) {
      spec.samples[key] = {it->get<double>()};
    } else if (it->is_array() && !it->empty()) {
      std::vector<double> s;
      for (const auto& v : *it) {
        if (!v.is_number()) throw ConfigError("non-numeric sample in " + key);
        s.push_back(v.get<double>());
      }
      spec.samples[key] = std::move(s);
    } else {
      throw ConfigError("expected a number or non-empty array for " + key);
    }
  }
  return spec;
}

inline Model build_model(std::string_view config_text) { return build_model(parse_model_spec(config_text)); }

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mflqg
