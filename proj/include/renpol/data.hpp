#pragma once

// Expert demonstration datasets.
//
// CSV layout (single file, one row per state):
//   demo_id,t,y0,y1,...,y{N_y-1}
// Rows are grouped by demo_id and strictly increasing in t within a demo.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "renpol/rollout.hpp"

namespace renpol::data {

using rollout::Trajectory;

enum class Units { raw, normalized };

struct Demo {
  std::size_t id = 0;
  std::vector<double> t;       // N_m time stamps
  std::vector<double> states;  // N_m x N_y row-major

  std::size_t length(std::size_t dim) const { return dim == 0 ? 0 : states.size() / dim; }
};

struct Dataset {
  std::string name;
  std::size_t dim = 0;  // N_y
  std::vector<Demo> demos;
  std::vector<double> target;  // common final state
  Units units = Units::raw;

  std::size_t size() const { return demos.size(); }
  std::vector<double> initial_state(std::size_t m) const;
  std::vector<std::vector<double>> initial_states() const;
  std::vector<double> final_state(std::size_t m) const;
  Trajectory trajectory(std::size_t m) const;
  std::vector<Trajectory> trajectories() const;
  void validate() const;
};

struct NormalizationSpec {
  std::vector<double> shift;  // -y*
  std::vector<double> scale;  // positive, per dimension

  std::vector<double> apply(std::span<const double> raw) const;
  std::vector<double> invert(std::span<const double> normalized) const;
  bool is_identity() const;
};

// Final states must agree to 1e-6 across demos (common target).
Dataset load_csv(const std::filesystem::path& path);
void save_csv(const Dataset& ds, const std::filesystem::path& path);
std::string to_csv(const Dataset& ds);
Dataset parse_csv(const std::string& text, const std::string& name = "dataset");

// Trajectories (e.g. rollouts) in the dataset schema, demo_id = index.
std::string trajectories_csv(std::span<const Trajectory> trajs);

// Shift the common target to the origin; divide each dimension by its
// largest absolute value when that exceeds 1, so values land in [-1, 1].
std::pair<Dataset, NormalizationSpec> normalize(const Dataset& ds);

// Linear interpolation of every demo to exactly H index-equispaced points.
Dataset resample(const Dataset& ds, std::size_t H);

enum class CurveKind { sine, s_curve, line };
CurveKind parse_curve_kind(const std::string& s);
std::string to_string(CurveKind kind);

// Parametric curves ending at the origin, one per perturbed initial state.
Dataset synthesize(CurveKind kind, std::size_t M, std::size_t H, std::size_t dim, double noise_std,
                   std::uint64_t seed);

enum class SamplerMode { hypersphere, region_uniform };

struct SamplerSpec {
  SamplerMode mode = SamplerMode::hypersphere;
  double radius_scale = 0.1;
  std::uint64_t seed = 0;
  std::size_t count = 100;
};

// Out-of-sample initial states: a uniformly chosen demo m, then a uniform
// point in the ball of radius radius_scale * ||y0^m|| around y0^m. In
// region_uniform mode the ball radius is the largest such radius, shared by
// all demos.
std::vector<std::vector<double>> sample_oos_inits(const Dataset& ds, const SamplerSpec& spec);
// Same draws, also reporting which demo each sample came from.
std::vector<std::vector<double>> sample_oos_inits(const Dataset& ds, const SamplerSpec& spec,
                                                  std::vector<std::size_t>& chosen);
// `per_demo` draws around every demo's initial state, demo-major order.
std::vector<std::vector<double>> sample_oos_inits_per_demo(const Dataset& ds, const SamplerSpec& spec,
                                                           std::size_t per_demo, std::vector<std::size_t>& chosen);

}  // namespace renpol::data
