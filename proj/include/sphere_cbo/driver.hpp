#pragma once

#include <string>

#include "sphere_cbo/config.hpp"

namespace sphere_cbo {

/// Rendered results of one experiment.
struct ExperimentOutput {
  std::string csv;
  std::string json;
  std::string summary;  ///< short human-readable digest for stdout
};

/// Runs the experiment described by `c`. Everything random is derived from
/// c.params.seed; with threads == 1 the output is bit-reproducible, and with
/// more threads only the scheduling changes, not the per-run streams.
ExperimentOutput execute(const RunConfig& c);

}  // namespace sphere_cbo
