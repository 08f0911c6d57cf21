#pragma once

#include "gse/model.hpp"

#include <cstdint>
#include <string>

namespace gse {

struct ModelProvenance {
  std::uint32_t version = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

/// Versioned single-file container: magic header, explicit little-endian
/// encoding, row-major matrices.  Stores the core fitted state (points,
/// parameters, frames, alignment, embeddings); everything else is rebuilt
/// deterministically on load, so a loaded model answers queries
/// bit-identically to the fitted one.
void save_model(const GseModel& model, const std::string& path, std::uint64_t seed = 0,
                std::uint64_t config_hash = 0);

GseModel load_model(const std::string& path, ModelProvenance* provenance = nullptr);

}  // namespace gse
