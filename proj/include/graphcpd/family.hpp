#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "graphcpd/subspace.hpp"

namespace graphcpd {

/// One candidate post-change subspace together with a human-readable label
/// for its parameter value.
struct CatalogEntry {
  std::string label;
  Subspace subspace;
};

/// Parameterized family of candidate post-change subspaces.
///
///  - Blind: no parameterization; the estimate itself is used.
///  - DeltaSpike: one-hot subspaces {span(e_gamma)}, only valid for k = 1;
///    the nearest member has a closed form and needs no explicit catalog.
///  - Catalog: an explicit finite list of candidate subspaces.
class SubspaceFamily {
 public:
  enum class Kind { Blind, DeltaSpike, Catalog };

  static SubspaceFamily blind() { return SubspaceFamily(Kind::Blind, {}); }
  static SubspaceFamily delta_spike() { return SubspaceFamily(Kind::DeltaSpike, {}); }

  static SubspaceFamily catalog(std::vector<CatalogEntry> members) {
    if (members.empty())
      throw std::invalid_argument("SubspaceFamily: catalog must not be empty");
    for (const auto& m : members)
      if (m.subspace.n() != members.front().subspace.n() ||
          m.subspace.k() != members.front().subspace.k())
        throw std::invalid_argument("SubspaceFamily: catalog members must share n and k");
    return SubspaceFamily(Kind::Catalog, std::move(members));
  }

  Kind kind() const { return kind_; }
  const std::vector<CatalogEntry>& members() const { return members_; }

 private:
  SubspaceFamily(Kind kind, std::vector<CatalogEntry> members)
      : kind_(kind), members_(std::move(members)) {}

  Kind kind_;
  std::vector<CatalogEntry> members_;
};

inline const char* family_kind_name(SubspaceFamily::Kind kind) {
  switch (kind) {
    case SubspaceFamily::Kind::Blind: return "blind";
    case SubspaceFamily::Kind::DeltaSpike: return "delta_spike";
    case SubspaceFamily::Kind::Catalog: return "catalog";
  }
  return "unknown";
}

/// Nearest family member to an estimated subspace, plus the two distances
/// the detector consumes. `gamma_index` is the selected node for DeltaSpike,
/// the member position for Catalog, and -1 for Blind.
struct FamilyMatch {
  int gamma_index;
  std::string gamma_label;
  Subspace u1;
  double d_vhat_u1;
  double d_u0_u1;
};

/// Minimize d(U1(gamma), vhat) over the family. Ties pick the lowest index.
/// DeltaSpike uses the closed forms: gamma = argmax_i |vhat_i|,
/// d(vhat, e_gamma) = sqrt(1 - vhat_gamma^2), d(u0, e_gamma) =
/// sqrt(1 - u0_gamma^2). Blind returns vhat itself with d_vhat_u1 = 0.
inline FamilyMatch nearest_family_member(const SubspaceFamily& family,
                                         const Subspace& vhat,
                                         const Subspace& u0) {
  if (vhat.n() != u0.n() || vhat.k() != u0.k())
    throw std::invalid_argument("nearest_family_member: vhat and u0 dimensions differ");

  switch (family.kind()) {
    case SubspaceFamily::Kind::Blind:
      return FamilyMatch{-1, "blind", vhat, 0.0, sin_theta_distance(u0, vhat)};

    case SubspaceFamily::Kind::DeltaSpike: {
      if (vhat.k() != 1)
        throw std::invalid_argument("nearest_family_member: delta-spike family requires k = 1");
      const auto& v = vhat.basis();
      int gamma = 0;
      double best = std::abs(v(0, 0));
      for (int i = 1; i < vhat.n(); ++i) {
        const double a = std::abs(v(i, 0));
        if (a > best) {
          best = a;
          gamma = i;
        }
      }
      const double vg = v(gamma, 0);
      const double ug = u0.basis()(gamma, 0);
      return FamilyMatch{gamma, std::to_string(gamma),
                         Subspace::one_hot(vhat.n(), gamma),
                         std::sqrt(std::max(0.0, 1.0 - vg * vg)),
                         std::sqrt(std::max(0.0, 1.0 - ug * ug))};
    }

    case SubspaceFamily::Kind::Catalog: {
      const auto& members = family.members();
      if (members.front().subspace.n() != vhat.n() ||
          members.front().subspace.k() != vhat.k())
        throw std::invalid_argument("nearest_family_member: catalog dimensions differ from vhat");
      int best_idx = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int i = 0; i < static_cast<int>(members.size()); ++i) {
        const double d = sin_theta_distance(members[i].subspace, vhat);
        if (d < best_d) {
          best_d = d;
          best_idx = i;
        }
      }
      const CatalogEntry& win = members[best_idx];
      return FamilyMatch{best_idx, win.label, win.subspace, best_d,
                         sin_theta_distance(u0, win.subspace)};
    }
  }
  throw std::logic_error("nearest_family_member: unreachable");
}

}  // namespace graphcpd
