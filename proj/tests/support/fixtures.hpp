#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "efhmm/model.hpp"
#include "efhmm/synth.hpp"

namespace fixtures {

inline efhmm::GaussianSig g(double mu, double sigma, std::size_t count = 20) { return {mu, sigma, count}; }

/// Refrigerator emission vector (OFF, light, motor, motor and light) with a
/// six-path chain 0<->1, 0<->2, 2<->3.
inline efhmm::ApplianceModel refrigerator() {
  efhmm::ApplianceModel a;
  a.id = "refrigerator";
  a.name = "Refrigerator";
  a.states = {g(0.52, 0.21), g(42.03, 0.1), g(121.62, 5.40), g(156.60, 6.00)};
  const auto edge = [&](std::size_t i, std::size_t j, double prob, double spike_ratio) {
    efhmm::TransitionEdge e;
    e.from_state = i;
    e.to_state = j;
    e.prob = prob;
    const double d = a.states[j].mu - a.states[i].mu;
    const double s = std::hypot(a.states[i].sigma, a.states[j].sigma);
    e.dsp = g(d, s);
    if (d > 0) e.dts = g(d * spike_ratio, s * spike_ratio);
    return e;
  };
  a.edges = {edge(0, 1, 0.4, 1.0), edge(0, 2, 0.6, 2.0), edge(1, 0, 1.0, 1.0),
             edge(2, 0, 0.7, 1.0), edge(2, 3, 0.3, 1.5), edge(3, 2, 1.0, 1.0)};
  return a;
}

/// Two-state appliance with the given turn-on DTS/DSP Gaussians.
inline efhmm::ApplianceModel two_state(const std::string& id, efhmm::GaussianSig off, efhmm::GaussianSig on,
                                       efhmm::GaussianSig dts, efhmm::GaussianSig dsp_on,
                                       efhmm::GaussianSig dsp_off) {
  efhmm::ApplianceModel a;
  a.id = id;
  a.name = id;
  a.states = {off, on};
  efhmm::TransitionEdge up;
  up.from_state = 0;
  up.to_state = 1;
  up.dts = dts;
  up.dsp = dsp_on;
  efhmm::TransitionEdge down;
  down.from_state = 1;
  down.to_state = 0;
  down.dsp = dsp_off;
  a.edges = {up, down};
  return a;
}

/// Kettle and vacuum with the turn-on signature statistics of the two
/// appliances whose DSP distributions overlap.
inline efhmm::ApplianceModel kettle() {
  return two_state("kettle", g(0.4, 0.6), g(1027.1, 5.1), g(1053.8, 4.8), g(1026.3, 5.2), g(-1026.3, 5.2));
}

inline efhmm::ApplianceModel vacuum() {
  return two_state("vacuum", g(0.16, 0.1), g(1001.8, 17.3), g(2387.3, 58.3), g(1001.8, 17.3), g(-1001.8, 17.3));
}

inline efhmm::HouseholdModel household(std::vector<efhmm::ApplianceModel> apps) {
  efhmm::HouseholdModel h;
  h.appliances = std::move(apps);
  h.validate();
  return h;
}

/// Piecewise-constant series: `levels[k]` held for `lengths[k]` samples.
inline efhmm::PowerSeries steps(const std::vector<double>& levels, const std::vector<std::size_t>& lengths,
                                double rate = 1.0) {
  efhmm::PowerSeries s;
  s.sample_rate_hz = rate;
  for (std::size_t k = 0; k < levels.size(); ++k) s.samples.insert(s.samples.end(), lengths[k], levels[k]);
  return s;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("efhmm_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path data_dir() { return EFHMM_DATA_DIR; }

/// Bundled archetypes with session counts scaled from ten hours to `hours`.
inline std::vector<efhmm::ApplianceArchetype> lifted_like(double hours = 10.0) {
  auto archs = efhmm::load_archetypes(data_dir() / "lifted_like.json");
  for (auto& a : archs) {
    const double scaled = std::round(static_cast<double>(a.sessions.count) * hours / 10.0);
    a.sessions.count = static_cast<std::size_t>(std::max(1.0, scaled));
  }
  return archs;
}

}  // namespace fixtures
