#pragma once

#include "config.hpp"

namespace homlab {

/// Execute one experiment; writes artifacts under cfg.out_dir and returns 0
/// on success. Throws on invalid configs and solver failures.
int run_experiment(const ExperimentConfig& cfg);

} // namespace homlab
