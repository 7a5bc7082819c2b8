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

#include "morphsim/lattice.hpp"

#include <cmath>
#include <cstdlib>
#include <queue>
#include <stdexcept>

namespace morphsim {
namespace {

// Cells are packed into a 64-bit key (21 bits per signed coordinate).
std::int64_t cell_key(const GridIndex& c) {
  constexpr std::int64_t kBias = 1 << 20;
  constexpr std::int64_t kMask = (1 << 21) - 1;
  return (((c.x() + kBias) & kMask) << 42) | (((c.y() + kBias) & kMask) << 21) |
         ((c.z() + kBias) & kMask);
}

// Fixed rotations taking the beam-local x axis onto each grid axis.
const Quat& axis_frame(int axis) {
  static const Quat frames[3] = {
      Quat::Identity(),
      Quat(Eigen::AngleAxis<Real>(M_PI / 2, Vec3::UnitZ())),   // x -> y
      Quat(Eigen::AngleAxis<Real>(-M_PI / 2, Vec3::UnitY())),  // x -> z
  };
  return frames[axis];
}

Vec3 rotation_vector(Quat q) {
  if (q.w() < 0) q.coeffs() = -q.coeffs();
  const Real vnorm = q.vec().norm();
  if (vnorm < 1e-12) return 2.0 * q.vec();
  return (2.0 * std::atan2(vnorm, q.w()) / vnorm) * q.vec();
}

struct BeamState {
  Quat link;     // link frame, world coordinates
  Vec3 chord;    // unit vector a -> b, world
  Real length;   // current distance
  Real stretch;  // length - rest length
  Vec3 theta_a;  // end rotations relative to the link frame (link coords)
  Vec3 theta_b;
};

BeamState beam_state(const Beam& beam, const Voxel& va, const Voxel& vb) {
  BeamState s;
  const Vec3 r = vb.position - va.position;
  s.length = r.norm();
  if (s.length < 1e-12) {
    // Coincident endpoints have no defined chord; treat as divergence-level
    // pathology rather than dividing by zero.
    throw SimulationDivergedError(-1);
  }
  s.chord = r / s.length;
  s.stretch = s.length - beam.rest_dims[beam.axis];

  const Quat& ref = axis_frame(beam.axis);
  Quat qa = va.orientation * ref;
  Quat qb = vb.orientation * ref;
  if (qa.dot(qb) < 0) qb.coeffs() = -qb.coeffs();
  Quat mid(qa.coeffs() + qb.coeffs());
  mid.normalize();

  // Re-aim the midpoint frame so its x axis lies along the chord.
  const Vec3 mid_x = mid * Vec3::UnitX();
  s.link = Quat::FromTwoVectors(mid_x, s.chord) * mid;
  s.theta_a = rotation_vector(s.link.conjugate() * qa);
  s.theta_b = rotation_vector(s.link.conjugate() * qb);
  return s;
}

struct BeamForces {
  Vec3 force_b;   // world; force on a is the exact negation
  Vec3 torque_a;  // world
  Vec3 torque_b;
};

// Elastic + damping forces for one beam. The elastic part is the standard
// Euler-Bernoulli element evaluated in a chord-aligned co-rotational frame:
// with zero transverse displacement by construction, bending enters purely
// through the end rotations and shear follows from moment balance, so the
// force pair sums to zero and the torque pair balances r x F exactly.
BeamForces beam_forces(const Beam& beam, const Voxel& va, const Voxel& vb,
                       const BeamState& s) {
  const Real L = beam.rest_dims[beam.axis];
  const Real side = beam.cross_section_side;
  const Real E = beam.elastic_modulus;
  const Real area = side * side;
  const Real inertia = area * area / 12.0;  // s^4/12
  const Real polar = 2.0 * inertia;
  const Real shear_mod = E / 2.0;  // nu = 0

  const Real a1 = E * area / L;          // axial, N/m
  const Real a2 = shear_mod * polar / L; // torsion, N*m/rad
  const Real b3 = 2.0 * E * inertia / L; // bending, N*m/rad
  const Real b1 = 12.0 * E * inertia / (L * L * L);

  const Vec3& ta = s.theta_a;
  const Vec3& tb = s.theta_b;

  // Torques exerted by the element on each endpoint (link frame).
  Vec3 torque_a_l(a2 * (tb.x() - ta.x()),
                  -b3 * (2.0 * ta.y() + tb.y()),
                  -b3 * (2.0 * ta.z() + tb.z()));
  Vec3 torque_b_l(a2 * (ta.x() - tb.x()),
                  -b3 * (ta.y() + 2.0 * tb.y()),
                  -b3 * (ta.z() + 2.0 * tb.z()));

  // Axial restoring force plus the shear that balances the bending moments:
  // F_b = x_hat x (T_a + T_b) / len.
  const Vec3 tsum = torque_a_l + torque_b_l;
  Vec3 force_b_l(-a1 * s.stretch, -tsum.z() / s.length, tsum.y() / s.length);

  // Critical damping on relative velocities. Coefficients are matched to the
  // per-DOF stiffnesses with the reduced mass/inertia of the endpoint pair.
  const Real zeta = beam.damping_ratio;
  const Real mu_red = va.mass * vb.mass / (va.mass + vb.mass);
  const Real i_red = va.rot_inertia * vb.rot_inertia / (va.rot_inertia + vb.rot_inertia);
  const Real c_ax = 2.0 * zeta * std::sqrt(a1 * mu_red);
  const Real c_sh = 2.0 * zeta * std::sqrt(b1 * mu_red);
  const Real c_tor = 2.0 * zeta * std::sqrt(a2 * i_red);
  const Real c_bend = 2.0 * zeta * std::sqrt(3.0 * E * inertia / L * i_red);

  const Quat inv_link = s.link.conjugate();
  const Vec3 dv = inv_link * (vb.velocity - va.velocity);
  force_b_l -= Vec3(c_ax * dv.x(), c_sh * dv.y(), c_sh * dv.z());
  const Vec3 dw = inv_link * (vb.angular_velocity - va.angular_velocity);
  const Vec3 rot_damp(c_tor * dw.x(), c_bend * dw.y(), c_bend * dw.z());
  torque_b_l -= rot_damp;
  torque_a_l += rot_damp;

  BeamForces out;
  out.force_b = s.link * force_b_l;
  out.torque_a = s.link * torque_a_l;
  out.torque_b = s.link * torque_b_l;
  return out;
}

Real beam_elastic_energy(const Beam& beam, const BeamState& s) {
  const Real L = beam.rest_dims[beam.axis];
  const Real side = beam.cross_section_side;
  const Real E = beam.elastic_modulus;
  const Real area = side * side;
  const Real inertia = area * area / 12.0;
  const Real a1 = E * area / L;
  const Real a2 = (E / 2.0) * (2.0 * inertia) / L;
  const Real b3 = 2.0 * E * inertia / L;
  const Vec3& ta = s.theta_a;
  const Vec3& tb = s.theta_b;
  const Real twist = tb.x() - ta.x();
  Real e = 0.5 * a1 * s.stretch * s.stretch + 0.5 * a2 * twist * twist;
  e += b3 * (ta.y() * ta.y() + tb.y() * tb.y() + ta.y() * tb.y());
  e += b3 * (ta.z() * ta.z() + tb.z() * tb.z() + ta.z() * tb.z());
  return e;
}

}  // namespace

GridSpec GridSpec::box(int nx, int ny, int nz) {
  GridSpec g;
  g.cells.reserve(static_cast<std::size_t>(nx) * ny * nz);
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) g.add(x, y, z);
  return g;
}

Lattice Lattice::build(const GridSpec& grid, const MaterialParams& material,
                       const BeamFilter& filter) {
  material.validate();
  if (grid.cells.empty()) throw std::invalid_argument("lattice grid is empty");

  Lattice lat;
  lat.material_ = material;
  lat.voxels_.reserve(grid.cells.size());
  const Real l = material.beam_length;
  const Real mass = material.voxel_mass();
  const Real rot_inertia = mass * l * l / 6.0;

  for (const GridIndex& c : grid.cells) {
    if (!lat.cell_index_.emplace(cell_key(c), static_cast<VoxelId>(lat.voxels_.size())).second)
      throw std::invalid_argument("lattice grid contains a duplicate cell");
    Voxel v;
    v.grid_index = c;
    v.position = l * c.cast<Real>();
    v.mass = mass;
    v.rot_inertia = rot_inertia;
    v.friction_coefficient = material.friction_high;
    lat.voxels_.push_back(v);
  }
  lat.total_mass_ = mass * static_cast<Real>(lat.voxels_.size());

  lat.incidence_.resize(lat.voxels_.size());
  for (VoxelId a = 0; a < static_cast<VoxelId>(lat.voxels_.size()); ++a) {
    const GridIndex& ca = lat.voxels_[static_cast<std::size_t>(a)].grid_index;
    for (int axis = 0; axis < 3; ++axis) {
      GridIndex cb = ca;
      cb[axis] += 1;
      const VoxelId b = lat.id_at(cb);
      if (b == kInvalidVoxel) continue;
      if (filter && !filter(ca, cb, axis)) continue;
      Beam beam;
      beam.endpoint_a = a;
      beam.endpoint_b = b;
      beam.axis = axis;
      beam.rest_dims = Vec3::Constant(l);
      beam.elastic_modulus = material.modulus;
      beam.damping_ratio = material.damping_ratio;
      beam.cross_section_side = l;
      const auto index = static_cast<std::uint32_t>(lat.beams_.size());
      lat.beams_.push_back(beam);
      lat.incidence_[static_cast<std::size_t>(a)].push_back(index);
      lat.incidence_[static_cast<std::size_t>(b)].push_back(index);
    }
  }

  // Connectivity over the admitted beams.
  std::vector<char> seen(lat.voxels_.size(), 0);
  std::queue<VoxelId> frontier;
  frontier.push(0);
  seen[0] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const VoxelId v = frontier.front();
    frontier.pop();
    for (std::uint32_t bi : lat.incidence_[static_cast<std::size_t>(v)]) {
      const Beam& beam = lat.beams_[bi];
      const VoxelId other = beam.endpoint_a == v ? beam.endpoint_b : beam.endpoint_a;
      if (!seen[static_cast<std::size_t>(other)]) {
        seen[static_cast<std::size_t>(other)] = 1;
        ++reached;
        frontier.push(other);
      }
    }
  }
  if (reached != lat.voxels_.size())
    throw std::invalid_argument("lattice grid is disconnected");

  lat.force_.assign(lat.voxels_.size(), Vec3::Zero());
  lat.torque_.assign(lat.voxels_.size(), Vec3::Zero());
  return lat;
}

VoxelId Lattice::id_at(const GridIndex& cell) const {
  const auto it = cell_index_.find(cell_key(cell));
  return it == cell_index_.end() ? kInvalidVoxel : it->second;
}

void Lattice::check_voxel_ids(std::span<const VoxelId> ids) const {
  if (ids.empty()) throw std::invalid_argument("voxel set is empty");
  for (VoxelId id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= voxels_.size())
      throw std::invalid_argument("unknown voxel id " + std::to_string(id));
}

void Lattice::set_voxel_friction(std::span<const VoxelId> voxel_set, Real mu) {
  check_voxel_ids(voxel_set);
  if (!(mu >= material_.friction_low && mu <= material_.friction_high))
    throw std::invalid_argument("friction coefficient out of range");
  for (VoxelId id : voxel_set) voxels_[static_cast<std::size_t>(id)].friction_coefficient = mu;
}

void Lattice::set_beam_rest_dims(std::span<const VoxelId> voxel_set, const Vec3& axis_deltas) {
  check_voxel_ids(voxel_set);
  if (axis_deltas.isZero(0.0)) return;
  const Real lo = material_.min_rest_dim();
  const Real hi = material_.max_rest_dim();
  // A beam incident to several set members is adjusted once.
  std::vector<char> touched(beams_.size(), 0);
  for (VoxelId id : voxel_set) {
    for (std::uint32_t bi : incidence_[static_cast<std::size_t>(id)]) {
      if (touched[bi]) continue;
      touched[bi] = 1;
      Vec3 dims = beams_[bi].rest_dims + axis_deltas;
      beams_[bi].rest_dims = dims.cwiseMax(lo).cwiseMin(hi);
    }
  }
}

void Lattice::set_single_beam_rest_dims(std::size_t beam_index, const Vec3& dims) {
  if (beam_index >= beams_.size()) throw std::invalid_argument("beam index out of range");
  const Real lo = material_.min_rest_dim();
  const Real hi = material_.max_rest_dim();
  beams_[beam_index].rest_dims = dims.cwiseMax(lo).cwiseMin(hi);
}

void Lattice::accumulate_beam_forces() {
  std::fill(force_.begin(), force_.end(), Vec3::Zero());
  std::fill(torque_.begin(), torque_.end(), Vec3::Zero());
  for (const Beam& beam : beams_) {
    const auto ia = static_cast<std::size_t>(beam.endpoint_a);
    const auto ib = static_cast<std::size_t>(beam.endpoint_b);
    const Voxel& va = voxels_[ia];
    const Voxel& vb = voxels_[ib];
    const BeamState s = beam_state(beam, va, vb);
    const BeamForces f = beam_forces(beam, va, vb, s);
    force_[ib] += f.force_b;
    force_[ia] -= f.force_b;
    torque_[ia] += f.torque_a;
    torque_[ib] += f.torque_b;
  }
}

void Lattice::step(Real dt, const Vec3& gravity, const ContactModel& contact) {
  if (!(dt > 0)) throw std::invalid_argument("dt must be > 0");
  const Real dt_bound = 0.5 * std::sqrt(material_.voxel_mass() / material_.axial_stiffness());
  if (dt > dt_bound)
    throw std::invalid_argument("dt exceeds the stability bound 0.5*sqrt(m/(E*l))");

  accumulate_beam_forces();

  const Real k_floor = contact.penalty_stiffness;
  for (std::size_t i = 0; i < voxels_.size(); ++i) {
    Voxel& v = voxels_[i];
    Vec3 f = force_[i] + v.mass * gravity + v.external_force;

    const Real pen = -v.position.z();
    if (pen > 0) {
      v.in_contact = true;
      const Real c_n =
          2.0 * contact.normal_damping_ratio * std::sqrt(k_floor * v.mass);
      Real normal = k_floor * pen - c_n * v.velocity.z();
      if (normal < 0) normal = 0;  // the floor only pushes
      f.z() += normal;

      const Real fric_max = v.friction_coefficient * normal;
      if (fric_max > 0) {
        const Real vtx = v.velocity.x(), vty = v.velocity.y();
        const Real vt_norm = std::sqrt(vtx * vtx + vty * vty);
        if (vt_norm < contact.slip_speed_tolerance) {
          // Candidate holding force: cancel the applied tangential force and
          // the residual momentum so the voxel is at rest after this step.
          const Real hx = -(f.x() + v.mass * vtx / dt);
          const Real hy = -(f.y() + v.mass * vty / dt);
          const Real h_norm = std::sqrt(hx * hx + hy * hy);
          if (h_norm <= fric_max) {
            f.x() += hx;
            f.y() += hy;
          } else {
            f.x() += fric_max * hx / h_norm;
            f.y() += fric_max * hy / h_norm;
          }
        } else {
          f.x() -= fric_max * vtx / vt_norm;
          f.y() -= fric_max * vty / vt_norm;
        }
      }
    } else {
      v.in_contact = false;
    }

    v.velocity += (dt / v.mass) * f;
    v.position += dt * v.velocity;
    v.angular_velocity += (dt / v.rot_inertia) * torque_[i];
    const Vec3& w = v.angular_velocity;
    const Quat spin = Quat(0, w.x(), w.y(), w.z()) * v.orientation;
    v.orientation.coeffs() += (0.5 * dt) * spin.coeffs();
    v.orientation.normalize();
  }

  ++step_count_;
  for (const Voxel& v : voxels_) {
    if (!(v.position.allFinite() && v.velocity.allFinite() &&
          v.angular_velocity.allFinite() && v.orientation.coeffs().allFinite()))
      throw SimulationDivergedError(step_count_);
  }
}

Real Lattice::total_energy(const Vec3& gravity) const {
  Real e = 0;
  for (const Voxel& v : voxels_) {
    e += 0.5 * v.mass * v.velocity.squaredNorm();
    e += 0.5 * v.rot_inertia * v.angular_velocity.squaredNorm();
    e -= v.mass * gravity.dot(v.position);
  }
  for (const Beam& beam : beams_) {
    const Voxel& va = voxels_[static_cast<std::size_t>(beam.endpoint_a)];
    const Voxel& vb = voxels_[static_cast<std::size_t>(beam.endpoint_b)];
    e += beam_elastic_energy(beam, beam_state(beam, va, vb));
  }
  return e;
}

Real Lattice::total_energy(const Vec3& gravity, const ContactModel& contact) const {
  Real e = total_energy(gravity);
  for (const Voxel& v : voxels_) {
    const Real pen = -v.position.z();
    if (pen > 0) e += 0.5 * contact.penalty_stiffness * pen * pen;
  }
  return e;
}

Vec3 Lattice::net_internal_force() const {
  std::vector<Vec3> acc(voxels_.size(), Vec3::Zero());
  for (const Beam& beam : beams_) {
    const Voxel& va = voxels_[static_cast<std::size_t>(beam.endpoint_a)];
    const Voxel& vb = voxels_[static_cast<std::size_t>(beam.endpoint_b)];
    const BeamState s = beam_state(beam, va, vb);
    const BeamForces f = beam_forces(beam, va, vb, s);
    acc[static_cast<std::size_t>(beam.endpoint_b)] += f.force_b;
    acc[static_cast<std::size_t>(beam.endpoint_a)] -= f.force_b;
  }
  Vec3 net = Vec3::Zero();
  for (const Vec3& a : acc) net += a;
  return net;
}

Vec3 Lattice::center_of_mass() const {
  Vec3 weighted = Vec3::Zero();
  for (const Voxel& v : voxels_) weighted += v.mass * v.position;
  return weighted / total_mass_;
}

}  // namespace morphsim
