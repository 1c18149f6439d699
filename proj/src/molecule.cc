//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <array>
#include <queue>

#include "smited/smiles.h"

namespace smited::chem {
namespace {

constexpr std::array<std::string_view, 119> kElements = {
    "*",  "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na",
    "Mg", "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",
    "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br",
    "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag",
    "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
    "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu",
    "Hf", "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi",
    "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am",
    "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh",
    "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

// Standard valences of the organic subset, ascending.
std::span<const int> standard_valences(std::string_view element) {
  static constexpr int kB[] = {3}, kC[] = {4}, kN[] = {3}, kO[] = {2},
                       kP[] = {3, 5}, kS[] = {2, 4, 6}, kHal[] = {1};
  if (element == "B") return kB;
  if (element == "C") return kC;
  if (element == "N") return kN;
  if (element == "O") return kO;
  if (element == "P") return kP;
  if (element == "S") return kS;
  if (element == "F" || element == "Cl" || element == "Br" || element == "I") {
    return kHal;
  }
  return {};
}

struct HydrogenFit {
  bool ok = false;
  int hydrogens = 0;
};

// Aromatic bonds count one each, plus one shared pi bond for atoms that
// can host it (B, C, N, P) when the lowest fitting valence leaves room.
// This is the 1.5-per-aromatic-bond count rounded to a consistent valence:
// benzene c -> 1 H, pyridine n -> 0 H, furan o / thiophene s -> 0 H.
HydrogenFit fit_hydrogens(const MolecularGraph &g, std::size_t i) {
  const Atom &atom = g.atom(i);
  int sum = 0;
  int aromatic_bonds = 0;
  for (const Neighbor &nb : g.neighbors(i)) {
    const BondOrder order = g.bond(nb.bond).order;
    if (order == BondOrder::kAromatic) {
      ++aromatic_bonds;
      sum += 1;
    } else {
      sum += static_cast<int>(order);
    }
  }
  const auto valences = standard_valences(atom.element);
  auto lowest_at_least = [&](int s) -> std::optional<int> {
    for (int v : valences) {
      if (v >= s) return v;
    }
    return std::nullopt;
  };
  const auto v0 = lowest_at_least(sum);
  if (!v0) return {};
  int pi = 0;
  if (atom.aromatic && aromatic_bonds > 0) {
    const bool hosts_pi = atom.element == "B" || atom.element == "C" ||
                          atom.element == "N" || atom.element == "P";
    if (hosts_pi && sum + 1 <= *v0) pi = 1;
  }
  return {true, *v0 - sum - pi};
}

}  // namespace

std::size_t MolecularGraph::add_atom(Atom atom) {
  atoms_.push_back(std::move(atom));
  adjacency_.emplace_back();
  return atoms_.size() - 1;
}

std::size_t MolecularGraph::add_bond(std::size_t a, std::size_t b,
                                     BondOrder order, char direction) {
  if (a == b || a >= atoms_.size() || b >= atoms_.size()) {
    throw DataError("InvalidBond", "bond " + std::to_string(a) + "-" +
                                       std::to_string(b) + " is invalid");
  }
  if (bond_between(a, b)) {
    throw DataError("InvalidBond", "duplicate bond " + std::to_string(a) +
                                       "-" + std::to_string(b));
  }
  bonds_.push_back({a, b, order, direction});
  const std::size_t id = bonds_.size() - 1;
  adjacency_[a].push_back({b, id});
  adjacency_[b].push_back({a, id});
  return id;
}

std::optional<std::size_t> MolecularGraph::bond_between(std::size_t a,
                                                        std::size_t b) const {
  for (const Neighbor &nb : adjacency_[a]) {
    if (nb.atom == b) return nb.bond;
  }
  return std::nullopt;
}

int atomic_number(std::string_view symbol) {
  for (std::size_t z = 1; z < kElements.size(); ++z) {
    if (kElements[z] == symbol) return static_cast<int>(z);
  }
  return 0;
}

bool is_organic_subset(std::string_view symbol) {
  return !standard_valences(symbol).empty();
}

ValenceReport check_valence(const MolecularGraph &g) {
  for (std::size_t i = 0; i < g.atom_count(); ++i) {
    if (g.atom(i).bracket) continue;
    if (!fit_hydrogens(g, i).ok) return {i};
  }
  return {};
}

void require_valid_valence(const MolecularGraph &g) {
  const ValenceReport report = check_valence(g);
  if (!report.valid()) {
    const std::size_t i = *report.violating_atom;
    throw DataError("ValenceViolation",
                    "atom " + std::to_string(i) + " (" + g.atom(i).element +
                        ") exceeds its standard valence");
  }
}

int implicit_hydrogens(const MolecularGraph &g, std::size_t atom) {
  if (g.atom(atom).bracket) return 0;
  const HydrogenFit fit = fit_hydrogens(g, atom);
  return fit.ok ? fit.hydrogens : 0;
}

bool fits_standard_valence(const MolecularGraph &g, std::size_t atom) {
  return fit_hydrogens(g, atom).ok;
}

int total_hydrogens(const MolecularGraph &g, std::size_t atom) {
  const Atom &a = g.atom(atom);
  if (a.bracket) return a.explicit_h.value_or(0);
  return implicit_hydrogens(g, atom);
}

std::vector<MolecularGraph> components(const MolecularGraph &g) {
  const std::size_t n = g.atom_count();
  std::vector<int> label(n, -1);
  int count = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    std::queue<std::size_t> q;
    q.push(s);
    label[s] = count;
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (const Neighbor &nb : g.neighbors(u)) {
        if (label[nb.atom] < 0) {
          label[nb.atom] = count;
          q.push(nb.atom);
        }
      }
    }
    ++count;
  }
  std::vector<MolecularGraph> out(count);
  std::vector<std::size_t> local(n);
  for (std::size_t i = 0; i < n; ++i) {
    local[i] = out[label[i]].add_atom(g.atom(i));
  }
  for (const Bond &b : g.bonds()) {
    out[label[b.begin]].add_bond(local[b.begin], local[b.end], b.order,
                                 b.direction);
  }
  return out;
}

MolecularGraph renumber(const MolecularGraph &g,
                        std::span<const std::size_t> new_index) {
  const std::size_t n = g.atom_count();
  if (new_index.size() != n) {
    throw DataError("InvalidPermutation", "permutation size mismatch");
  }
  std::vector<std::size_t> old_of(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (new_index[i] >= n || old_of[new_index[i]] != n) {
      throw DataError("InvalidPermutation", "not a permutation");
    }
    old_of[new_index[i]] = i;
  }
  MolecularGraph out;
  for (std::size_t k = 0; k < n; ++k) out.add_atom(g.atom(old_of[k]));
  for (const Bond &b : g.bonds()) {
    out.add_bond(new_index[b.begin], new_index[b.end], b.order, b.direction);
  }
  return out;
}

}  // namespace smited::chem
