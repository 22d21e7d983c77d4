#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "resilience/energetics.h"
#include "resilience/lti_model.h"
#include "resilience/polytope.h"
#include "resilience/spec_lang.h"

namespace resilience {

/// Schema violation; `field()` is a dotted path such as "system.A[2]".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct GridAxis {
  double min = 0.0;
  double max = 0.0;
  int points = 1;

  double At(int i) const;
};

/// Planar grid of initial states. The two axes vary state coordinates
/// `dims`; all other coordinates are taken from `base`.
struct GridSpec {
  GridAxis x;
  GridAxis y;
  int dims[2] = {0, 1};
  Eigen::VectorXd base;

  int size() const { return x.points * y.points; }
  /// Row-major: y is the slow index, x the fast one.
  std::vector<Eigen::VectorXd> Points() const;
};

struct ComposeConfig {
  CompositionMode mode = CompositionMode::kConjunction;
  std::vector<std::string> components;
};

struct ExperimentConfig {
  std::string name;
  std::string description;
  LtiSystem system;
  SetTable sets;
  std::string spec_text;
  SpecPtr spec;
  int horizon = 0;
  std::optional<Eigen::VectorXd> x0;
  std::optional<GridSpec> grid;
  std::vector<double> sweep_wbar;
  int samples = 0;
  std::uint64_t seed = 0;
  std::optional<ComposeConfig> compose;
  std::string output_dir;
  std::optional<double> reference_resilience;

  /// Component specs parsed against `sets`.
  std::vector<SpecPtr> ComponentSpecs() const;
};

/// Parses a TOML document. `source` names it in error messages.
ExperimentConfig ParseConfig(std::string_view text, const std::string& source = "config");

ExperimentConfig LoadConfig(const std::filesystem::path& path);

}  // namespace resilience
