//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <bit>
#include <cctype>
#include <set>

#include "smited/smiles.h"

namespace smited::chem {
namespace {

std::string atom_label(const Atom &a) {
  std::string label = a.element;
  if (a.aromatic) label[0] = static_cast<char>(std::tolower(label[0]));
  if (a.charge > 0) label += '+' + std::to_string(a.charge);
  if (a.charge < 0) label += std::to_string(a.charge);
  return label;
}

char bond_label(BondOrder order) {
  switch (order) {
    case BondOrder::kSingle: return '-';
    case BondOrder::kDouble: return '=';
    case BondOrder::kTriple: return '#';
    case BondOrder::kAromatic: return ':';
  }
  return '?';
}

struct PathWalker {
  const MolecularGraph &g;
  std::vector<std::string> atom_labels;
  std::vector<std::size_t> atoms;
  std::vector<std::size_t> bonds;
  std::vector<bool> on_path;
  std::set<std::string> labels;

  std::string label(bool reversed) const {
    std::string out;
    const std::size_t n = atoms.size();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t idx = reversed ? n - 1 - k : k;
      if (k) {
        const std::size_t b = reversed ? bonds[idx] : bonds[idx - 1];
        out += bond_label(g.bond(b).order);
      }
      out += atom_labels[atoms[idx]];
    }
    return out;
  }

  void walk(std::size_t u) {
    labels.insert(std::min(label(false), label(true)));
    if (bonds.size() == kFingerprintMaxPathBonds) return;
    for (const Neighbor &nb : g.neighbors(u)) {
      if (on_path[nb.atom]) continue;
      on_path[nb.atom] = true;
      atoms.push_back(nb.atom);
      bonds.push_back(nb.bond);
      walk(nb.atom);
      bonds.pop_back();
      atoms.pop_back();
      on_path[nb.atom] = false;
    }
  }
};

}  // namespace

Fingerprint::Fingerprint(std::size_t width)
    : width_(width), words_((width + 63) / 64, 0) {
  if (width == 0) throw DataError("InvalidWidth", "fingerprint width is 0");
}

void Fingerprint::set(std::size_t bit) { words_[bit / 64] |= 1ULL << (bit % 64); }

bool Fingerprint::test(std::size_t bit) const {
  return (words_[bit / 64] >> (bit % 64)) & 1ULL;
}

std::size_t Fingerprint::count() const {
  std::size_t n = 0;
  for (std::uint64_t w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::vector<std::size_t> Fingerprint::on_bits() const {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < width_; ++b) {
    if (test(b)) out.push_back(b);
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::vector<std::string> path_labels(const MolecularGraph &g) {
  PathWalker walker{g, {}, {}, {}, std::vector<bool>(g.atom_count(), false), {}};
  for (const Atom &a : g.atoms()) walker.atom_labels.push_back(atom_label(a));
  for (std::size_t s = 0; s < g.atom_count(); ++s) {
    walker.on_path[s] = true;
    walker.atoms = {s};
    walker.walk(s);
    walker.on_path[s] = false;
  }
  return {walker.labels.begin(), walker.labels.end()};
}

Fingerprint fingerprint(const MolecularGraph &g, std::size_t width) {
  Fingerprint fp(width);
  for (const std::string &label : path_labels(g)) {
    fp.set(static_cast<std::size_t>(fnv1a64(label) % width));
  }
  return fp;
}

double tanimoto(const Fingerprint &a, const Fingerprint &b) {
  if (a.width() != b.width()) {
    throw DataError("WidthMismatch", "fingerprint widths " +
                                         std::to_string(a.width()) + " and " +
                                         std::to_string(b.width()));
  }
  std::size_t both = 0, either = 0;
  for (std::size_t i = 0; i < a.words().size(); ++i) {
    both += static_cast<std::size_t>(std::popcount(a.words()[i] & b.words()[i]));
    either += static_cast<std::size_t>(std::popcount(a.words()[i] | b.words()[i]));
  }
  if (either == 0) return 1.0;
  return static_cast<double>(both) / static_cast<double>(either);
}

std::vector<bool> ring_atoms(const MolecularGraph &g) {
  // Bridges via DFS low-link; an atom is in a ring iff it touches a
  // non-bridge bond.
  const std::size_t n = g.atom_count();
  std::vector<int> disc(n, -1), low(n, 0);
  std::vector<bool> bridge(g.bond_count(), false);
  int timer = 0;
  struct Frame {
    std::size_t atom;
    std::size_t parent_bond;
    std::size_t next;
  };
  const std::size_t kNoBond = static_cast<std::size_t>(-1);
  for (std::size_t s = 0; s < n; ++s) {
    if (disc[s] >= 0) continue;
    std::vector<Frame> stack{{s, kNoBond, 0}};
    disc[s] = low[s] = timer++;
    while (!stack.empty()) {
      Frame &f = stack.back();
      auto nbs = g.neighbors(f.atom);
      if (f.next < nbs.size()) {
        const Neighbor nb = nbs[f.next++];
        if (nb.bond == f.parent_bond) continue;
        if (disc[nb.atom] < 0) {
          disc[nb.atom] = low[nb.atom] = timer++;
          stack.push_back({nb.atom, nb.bond, 0});
        } else {
          low[f.atom] = std::min(low[f.atom], disc[nb.atom]);
        }
      } else {
        const Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          Frame &parent = stack.back();
          low[parent.atom] = std::min(low[parent.atom], low[done.atom]);
          if (low[done.atom] > disc[parent.atom]) bridge[done.parent_bond] = true;
        }
      }
    }
  }
  std::vector<bool> in_ring(n, false);
  for (std::size_t b = 0; b < g.bond_count(); ++b) {
    if (bridge[b]) continue;
    in_ring[g.bond(b).begin] = true;
    in_ring[g.bond(b).end] = true;
  }
  return in_ring;
}

MolecularGraph scaffold(const MolecularGraph &g) {
  const std::size_t n = g.atom_count();
  const std::vector<bool> ring = ring_atoms(g);
  std::vector<bool> alive(n, true);
  std::vector<std::size_t> degree(n);
  for (std::size_t i = 0; i < n; ++i) degree[i] = g.degree(i);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i] || ring[i] || degree[i] > 1) continue;
      alive[i] = false;
      changed = true;
      for (const Neighbor &nb : g.neighbors(i)) {
        if (alive[nb.atom]) --degree[nb.atom];
      }
    }
  }
  MolecularGraph out;
  std::vector<std::size_t> local(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (alive[i]) local[i] = out.add_atom(g.atom(i));
  }
  for (const Bond &b : g.bonds()) {
    if (alive[b.begin] && alive[b.end]) {
      out.add_bond(local[b.begin], local[b.end], b.order, b.direction);
    }
  }
  return out;
}

}  // namespace smited::chem
