#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gse/hyperparams.hpp"
#include "gse/manifolds.hpp"
#include "gse/types.hpp"

namespace gse {

/// Generator selection from the config file.
struct ManifoldSpec {
  std::string name = "SwissRoll";
  Index q = -1;               ///< -1 keeps the generator default
  Index p = -1;               ///< optional cross-check against the generator
  std::uint64_t seed = 12345; ///< shape seed (random plane orientation and offset)
  Matrix domain;              ///< q x 2 parameter-box override; empty keeps the default
};

/// Run parameters from a JSON config file plus command-line overrides.
/// All randomness flows from the explicit seeds here; nothing reads a clock.
struct RunConfig {
  ManifoldSpec manifold;
  Index n_train = 450;
  Index n_test = 200;
  std::uint64_t train_seed = 1;
  std::uint64_t test_seed = 2;
  HyperParams params;
  std::vector<Index> sweep;
  std::string out_dir = "gse_out";
  bool plot = false;

  /// Builds the configured generator, applying q and domain overrides.
  std::unique_ptr<Manifold> make_generator() const;

  /// Stable hash of the effective configuration, stored as model provenance.
  std::uint64_t hash() const;

  void validate() const;
};

/// Parses and validates a JSON config file; error messages name the failing
/// field. Unknown keys are rejected to catch typos early.
RunConfig load_run_config(const std::string& path);

/// Command-line entry point over the subcommands generate, fit, embed,
/// reconstruct, eval, and sweep. Returns the process exit code: 0 success,
/// 1 invalid configuration or usage, 2 data error, 3 numerical failure.
int run_cli(int argc, const char* const* argv);

}  // namespace gse
