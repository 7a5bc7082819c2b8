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

#include <stdexcept>

#include "morphsim/types.hpp"

namespace morphsim {

/// Bulk material and lattice geometry constants. Defaults reproduce the
/// silicone-sheet robot: 1 cm voxels, 400 kPa modulus, critically damped
/// beams, and a 2.0 / 1e-4 switchable friction pair.
struct MaterialParams {
  Real beam_length = 0.01;   // l, edge length of one voxel (m)
  Real modulus = 4.0e5;      // E (Pa)
  Real density = 3000.0;     // rho (kg/m^3)
  Real damping_ratio = 1.0;  // zeta, 1.0 = critically damped
  Real friction_high = 2.0;
  Real friction_low = 1e-4;

  // Rest-dimension clamps for actuated beams, as multiples of beam_length.
  Real min_rest_dim_factor = 0.25;
  Real max_rest_dim_factor = 2.0;

  Real voxel_mass() const { return density * beam_length * beam_length * beam_length; }
  Real min_rest_dim() const { return min_rest_dim_factor * beam_length; }
  Real max_rest_dim() const { return max_rest_dim_factor * beam_length; }
  /// Axial beam stiffness E*A/l = E*l used by the integrator stability guard.
  Real axial_stiffness() const { return modulus * beam_length; }

  void validate() const {
    if (!(beam_length > 0)) throw std::invalid_argument("material.beam_length must be > 0");
    if (!(modulus > 0)) throw std::invalid_argument("material.modulus must be > 0");
    if (!(density > 0)) throw std::invalid_argument("material.density must be > 0");
    if (!(damping_ratio > 0)) throw std::invalid_argument("material.damping_ratio must be > 0");
    if (!(friction_low > 0) || !(friction_high > 0))
      throw std::invalid_argument("material friction coefficients must be > 0");
    if (!(friction_low < friction_high))
      throw std::invalid_argument("material.friction_low must be < friction_high");
    if (!(min_rest_dim_factor > 0) || !(max_rest_dim_factor > min_rest_dim_factor))
      throw std::invalid_argument("material rest-dim clamps must satisfy 0 < min < max");
  }
};

/// Penalty floor at z = 0 with Coulomb friction. Normal force is
/// k*penetration with a critically damped normal dashpot, clamped to be
/// non-negative (the floor never pulls). A voxel sticks when its slip speed
/// is below slip_speed_tolerance and the force needed to hold it does not
/// exceed mu*N; otherwise kinetic friction mu*N opposes slip.
struct ContactModel {
  Real penalty_stiffness = 1e4;      // k_c (N/m)
  Real slip_speed_tolerance = 1e-5;  // m/s, static/kinetic switch
  Real normal_damping_ratio = 1.0;

  void validate() const {
    if (!(penalty_stiffness > 0))
      throw std::invalid_argument("contact.penalty_stiffness must be > 0");
    if (!(slip_speed_tolerance > 0))
      throw std::invalid_argument("contact.slip_speed_tolerance must be > 0");
    if (!(normal_damping_ratio >= 0))
      throw std::invalid_argument("contact.normal_damping_ratio must be >= 0");
  }
};

}  // namespace morphsim
