#pragma once

#include <cstdint>
#include <span>

#include "dmp/dataset.hpp"
#include "dmp/ssm.hpp"

namespace dmp {

/// Exact forward simulation of the joint state-space recursion at `times`.
/// Observations are positions plus N(0, tau2_j) noise; every entry is observed.
MultiSeriesDataset sample_path(const JointStateSpaceModel& model, std::span<const double> times,
                               const Vector& tau2, std::uint64_t seed);

/// Two-series synthetic benchmark on 100 uniform random times in [0, 1]:
///   x1(t) = 0.2 cos(5 pi t) - 2t + 0.1 eps
///   x2(t) = t - 0.5 cos(5 pi t) + 0.04 eta
/// The last 41 timestamps of series 2 are masked but keep their true values.
MultiSeriesDataset synth_benchmark(std::uint64_t seed);

inline constexpr std::size_t kSynthPoints = 100;
inline constexpr std::size_t kSynthWithheld = 41;

}  // namespace dmp
