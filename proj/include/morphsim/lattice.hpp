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
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "morphsim/material.hpp"
#include "morphsim/types.hpp"

namespace morphsim {

/// Point mass with full 6-DOF state. Mass is fixed at construction
/// (rho * l^3); friction may be switched at runtime within
/// [friction_low, friction_high].
struct Voxel {
  GridIndex grid_index{0, 0, 0};
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Quat orientation = Quat::Identity();
  Vec3 angular_velocity = Vec3::Zero();
  Real mass = 0.0;
  Real rot_inertia = 0.0;  // solid cube about its center, m*l^2/6
  Real friction_coefficient = 0.0;
  bool in_contact = false;
  /// Per-step external force slot (e.g. core pressure); written by callers,
  /// consumed but not cleared by step().
  Vec3 external_force = Vec3::Zero();
};

/// Structural link between two grid-adjacent voxels. Resists stretch,
/// bending and torsion with Euler-Bernoulli stiffness for a square
/// cross-section, critically damped. rest_dims holds the rest size per grid
/// axis; the component along the beam's own axis is its rest length, the
/// others are carried so actuated expansion accumulates consistently.
struct Beam {
  VoxelId endpoint_a = kInvalidVoxel;
  VoxelId endpoint_b = kInvalidVoxel;
  int axis = 0;  // grid axis from a to b; b = a + unit(axis)
  Vec3 rest_dims = Vec3::Zero();
  Real elastic_modulus = 0.0;
  Real damping_ratio = 1.0;
  Real cross_section_side = 0.0;
};

/// Occupancy set for lattice construction.
struct GridSpec {
  std::vector<GridIndex> cells;

  static GridSpec box(int nx, int ny, int nz);
  void add(int x, int y, int z) { cells.push_back(GridIndex{x, y, z}); }
};

/// Predicate deciding whether a beam is created between two adjacent occupied
/// cells (a below b along `axis`). Used by robot construction to leave the
/// envelope interior unbonded. Null means "bond every adjacent pair".
using BeamFilter = std::function<bool(const GridIndex& a, const GridIndex& b, int axis)>;

/// Deterministic fixed-timestep dynamics of a voxel/beam lattice with
/// gravity, a penalty floor at z = 0 and per-voxel Coulomb friction.
class Lattice {
 public:
  /// One voxel per occupied cell at grid_index * l, one beam per adjacent
  /// occupied pair admitted by `filter`. Throws on an empty or disconnected
  /// occupancy set (connectivity is checked over the admitted beams).
  static Lattice build(const GridSpec& grid, const MaterialParams& material,
                       const BeamFilter& filter = nullptr);

  /// Advance one symplectic Euler step. Throws std::invalid_argument if dt
  /// is non-positive or above the stability bound 0.5*sqrt(m/(E*l));
  /// SimulationDivergedError if any state component goes non-finite.
  void step(Real dt, const Vec3& gravity, const ContactModel& contact);

  /// Set friction of exactly the named voxels. mu must lie within
  /// [friction_low, friction_high] of the construction material.
  void set_voxel_friction(std::span<const VoxelId> voxel_set, Real mu);

  /// Adjust rest dimensions of every beam incident to the voxel set by the
  /// per-grid-axis deltas, clamping each component into
  /// [min_rest_dim, max_rest_dim]. The actual geometry is untouched, so a
  /// change induces elastic force.
  void set_beam_rest_dims(std::span<const VoxelId> voxel_set, const Vec3& axis_deltas);

  /// Directly set one beam's rest dimensions (clamped). Robot actuation uses
  /// this to keep rest dims an exact function of accumulated expansion.
  void set_single_beam_rest_dims(std::size_t beam_index, const Vec3& dims);

  /// Kinetic + beam strain + gravitational potential (relative to the floor
  /// plane). The overload with a ContactModel also counts the energy stored
  /// in the penalty floor springs, which is what makes the passive
  /// dissipation invariant hold through contact transients.
  Real total_energy(const Vec3& gravity) const;
  Real total_energy(const Vec3& gravity, const ContactModel& contact) const;

  /// Sum of internal (beam) forces over the whole lattice for the state as it
  /// is now. Zero to numerical precision by construction; used as a
  /// diagnostics/conformance probe.
  Vec3 net_internal_force() const;

  // ------------------------------------------------------------------
  // Queries
  // ------------------------------------------------------------------
  std::size_t voxel_count() const { return voxels_.size(); }
  std::size_t beam_count() const { return beams_.size(); }
  const Voxel& voxel(VoxelId id) const { return voxels_[static_cast<std::size_t>(id)]; }
  Voxel& voxel(VoxelId id) { return voxels_[static_cast<std::size_t>(id)]; }
  const std::vector<Voxel>& voxels() const { return voxels_; }
  const Beam& beam(std::size_t i) const { return beams_[i]; }
  const std::vector<Beam>& beams() const { return beams_; }
  const MaterialParams& material() const { return material_; }
  std::int64_t step_count() const { return step_count_; }

  /// Voxel id at a grid cell, or kInvalidVoxel.
  VoxelId id_at(const GridIndex& cell) const;
  /// Beam indices incident to a voxel.
  const std::vector<std::uint32_t>& incident_beams(VoxelId id) const {
    return incidence_[static_cast<std::size_t>(id)];
  }

  Vec3 center_of_mass() const;
  Real total_mass() const { return total_mass_; }

 private:
  Lattice() = default;

  void check_voxel_ids(std::span<const VoxelId> ids) const;
  void accumulate_beam_forces();  // fills force_/torque_ workspaces

  MaterialParams material_;
  std::vector<Voxel> voxels_;
  std::vector<Beam> beams_;
  std::vector<std::vector<std::uint32_t>> incidence_;
  std::unordered_map<std::int64_t, VoxelId> cell_index_;
  Real total_mass_ = 0.0;
  std::int64_t step_count_ = 0;

  // Per-step workspaces, kept to avoid reallocation.
  std::vector<Vec3> force_;
  std::vector<Vec3> torque_;
};

}  // namespace morphsim
