#pragma once

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <string>
#include <vector>

#include "effectop/fitzpatrick.hpp"
#include "effectop/monotone_law.hpp"
#include "effectop/pde_lab.hpp"
#include "effectop/random_media.hpp"
#include "effectop/scale_integration.hpp"

namespace effectop {

/// Thrown on malformed configs; the message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class ExperimentKind { FitzDemo, Cell, Graph, Sweep };

struct RhsSpec {
  enum class Kind { Constant, SinProduct };
  Kind kind = Kind::Constant;
  Real value = 1.0;  // the constant, or the sin-product amplitude
  std::function<Real(const std::array<Real, 3>&)> fn(int d) const;
};

/// Parsed and validated experiment configuration.  Every config key is either
/// consumed by the parser or rejected; seeds are always explicit.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::FitzDemo;
  std::uint64_t config_hash = 0;

  std::optional<MonotoneLaw> law;
  std::optional<RepFunction> rep;
  std::optional<MediumSpec> medium;

  int grid_d = 1;
  int grid_n = 64;
  int ensemble = 8;
  std::vector<std::uint64_t> seeds;

  CellSolverKnobs cell_knobs;
  int pde_max_iterations = 50000;
  Real pde_residual_tol = 1e-8;

  std::vector<Vec> loads;  // cell/graph experiments

  // sweep experiment
  std::vector<int> inv_eps;
  int sweep_n_side = 256;
  int coarse_blocks = 8;
  int cell_n_side = 128;
  int cell_ensemble = 8;
  std::vector<Real> graph_magnitudes;
  RhsSpec rhs;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_file(const std::string& path);

MonotoneLaw parse_law(const nlohmann::json& doc);
RepFunction parse_rep(const nlohmann::json& doc);
MediumSpec parse_medium(const nlohmann::json& doc);

}  // namespace effectop
