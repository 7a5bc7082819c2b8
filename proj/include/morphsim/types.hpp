// Copyright 2026 The Morphsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace morphsim {

using Real = double;
using Vec3 = Eigen::Matrix<Real, 3, 1>;
using Quat = Eigen::Quaternion<Real>;
using GridIndex = Eigen::Vector3i;

using VoxelId = std::int32_t;
inline constexpr VoxelId kInvalidVoxel = -1;

/// Thrown when voxel state goes non-finite during stepping. Carries the index
/// of the step on which the divergence was detected.
class SimulationDivergedError : public std::runtime_error {
 public:
  explicit SimulationDivergedError(std::int64_t step)
      : std::runtime_error("simulation diverged at step " + std::to_string(step)),
        step_(step) {}
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

}  // namespace morphsim
