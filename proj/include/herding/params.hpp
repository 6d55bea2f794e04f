#pragma once

#include "herding/errors.hpp"

namespace herding {

// Global rates of the game, per player: POI creation (lambda), visits
// (alpha) and score decay (mu).
struct ModelParams {
  double lambda = 1.0;
  double alpha = 1.0;
  double mu = 1.0;

  void validate() const {
    if (!(mu > 0.0)) throw ConfigError("mu must be strictly positive");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
  }
};

}  // namespace herding
