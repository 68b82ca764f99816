#pragma once

#include "trapspec/geometry.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace trapspec {

struct RandomTrapezoidOptions {
    double minAngle = kPi / 12.0;
    double minB = 1.0, maxB = 3.0;
    double minTopRatio = 0.05;  // b / B
};

/// alpha ~ U(minAngle, pi/2), beta ~ U(minAngle, alpha), B ~ U(minB, maxB),
/// h uniform between 5% and 95% of the height that keeps b >= minTopRatio * B
/// (capped at 1.5 B for near-right angles).
Trapezoid randomTrapezoid(std::mt19937_64& rng, const RandomTrapezoidOptions& options = {});

struct PropertyReport {
    std::string suite;
    int trials = 0;
    int failures = 0;
    int skipped = 0;       // samples the property does not apply to
    double worst = 0.0;    // largest error or smallest margin, per suite
    std::string worstLabel;
    std::vector<std::string> messages;  // first few failures
    bool passed() const { return failures == 0 && trials > 0; }
};

/// Names accepted by runPropertySuite.
const std::vector<std::string>& propertySuites();

/// Runs suite `name` over `n` random samples drawn from `seed`. Samples are
/// drawn sequentially before any parallel work, so results do not depend on
/// `workers`. Throws PreconditionError for an unknown suite.
PropertyReport runPropertySuite(const std::string& name, int n, std::uint64_t seed, int workers = 1);

}  // namespace trapspec
