#pragma once

#include "nestfield/config.hpp"
#include "nestfield/fields.hpp"
#include "nestfield/moisture.hpp"

#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace nestfield {

struct PropertyResult {
  std::string name;
  double value = 0.0;      // worst-case error, or the measured quantity for lower bounds
  double tolerance = 0.0;
  bool lower_bound = false;     // pass when value >= tolerance instead of <=
  bool expect_failure = false;  // pass when the check itself fails

  bool check_holds() const;
  bool passed() const { return check_holds() != expect_failure; }
};

struct PropertyReport {
  std::vector<PropertyResult> results;

  bool all_passed() const;
  /// One line per property: status, name, worst-case error and tolerance.
  void write(std::ostream& os) const;
};

PropertyReport run_properties(const ExperimentConfig& cfg);

// Random inputs, shared with the tests.

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi);
Field random_field(Space space, const MeshHandle& mesh, Rng& rng, double lo = -1.0, double hi = 1.0);

/// Non-negative Vtheta mixing ratio with fronts, zeros, plateaus near zero
/// or isolated spikes; `kind` selects the pattern modulo 5.
Field adversarial_moisture(const MeshHandle& mesh, Rng& rng, int kind);

/// Smooth-ish positive density with random cell-scale noise.
Field random_density(const MeshHandle& mesh, Rng& rng);

}  // namespace nestfield
