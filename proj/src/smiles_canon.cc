//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>
#include <numeric>
#include <tuple>

#include "smited/smiles.h"

namespace smited::chem {
namespace {

// Leaf budget for the tie-breaking search. Beyond it, the best string found
// so far is returned; only highly symmetric cages come near this.
constexpr std::size_t kMaxLeaves = 4096;

using Ranks = std::vector<std::size_t>;

struct SeedInvariant {
  int atomic_number;
  std::size_t degree;
  int charge;
  bool aromatic;
  int hydrogens;

  auto operator<=>(const SeedInvariant &) const = default;
};

// rank[i] = number of atoms whose key sorts strictly below atom i's key.
template <typename Key>
Ranks rank_by(const std::vector<Key> &keys) {
  const std::size_t n = keys.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  Ranks rank(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    if (k > 0 && !(keys[order[k - 1]] < keys[i])) {
      rank[i] = rank[order[k - 1]];
    } else {
      rank[i] = k;
    }
  }
  return rank;
}

std::size_t distinct(const Ranks &ranks) {
  Ranks copy = ranks;
  std::sort(copy.begin(), copy.end());
  return static_cast<std::size_t>(std::unique(copy.begin(), copy.end()) -
                                  copy.begin());
}

// Morgan-style refinement: an atom's key is its rank followed by the sorted
// (neighbor rank, bond order) list, iterated until the class count stops
// growing.
Ranks refine(const MolecularGraph &g, Ranks ranks) {
  const std::size_t n = g.atom_count();
  std::size_t classes = distinct(ranks);
  while (classes < n) {
    std::vector<std::vector<std::size_t>> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::size_t> nbrs;
      for (const Neighbor &nb : g.neighbors(i)) {
        nbrs.push_back(ranks[nb.atom] * 8 +
                       static_cast<std::size_t>(g.bond(nb.bond).order));
      }
      std::sort(nbrs.begin(), nbrs.end());
      keys[i].push_back(ranks[i]);
      keys[i].insert(keys[i].end(), nbrs.begin(), nbrs.end());
    }
    Ranks next = rank_by(keys);
    const std::size_t next_classes = distinct(next);
    ranks = std::move(next);
    if (next_classes == classes) break;
    classes = next_classes;
  }
  return ranks;
}

std::string atom_text(const MolecularGraph &g, std::size_t i) {
  const Atom &a = g.atom(i);
  const int h = total_hydrogens(g, i);
  std::string symbol = a.element;
  if (a.aromatic) {
    symbol[0] = static_cast<char>(std::tolower(symbol[0]));
  }
  bool bare = is_organic_subset(a.element) && a.charge == 0 && a.isotope == 0 &&
              a.chirality.empty() && a.atom_class == 0;
  if (bare) {
    // Organic-subset form must reproduce the same hydrogen count when
    // reparsed without brackets.
    if (a.bracket) {
      MolecularGraph probe = g;
      probe.atom(i).bracket = false;
      probe.atom(i).explicit_h.reset();
      bare = fits_standard_valence(probe, i) &&
             implicit_hydrogens(probe, i) == h;
    }
  }
  if (bare) return symbol;
  std::string out = "[";
  if (a.isotope) out += std::to_string(a.isotope);
  out += symbol;
  out += a.chirality;
  if (h > 0) {
    out += 'H';
    if (h > 1) out += std::to_string(h);
  }
  if (a.charge != 0) {
    out += a.charge > 0 ? '+' : '-';
    if (std::abs(a.charge) > 1) out += std::to_string(std::abs(a.charge));
  }
  if (a.atom_class) out += ':' + std::to_string(a.atom_class);
  out += ']';
  return out;
}

std::string bond_text(const MolecularGraph &g, std::size_t bond_id,
                      std::size_t from) {
  const Bond &b = g.bond(bond_id);
  const bool both_aromatic = g.atom(b.begin).aromatic && g.atom(b.end).aromatic;
  switch (b.order) {
    case BondOrder::kSingle:
      if (b.direction) {
        const bool forward = from == b.begin;
        return std::string(
            1, forward ? b.direction : (b.direction == '/' ? '\\' : '/'));
      }
      return both_aromatic ? "-" : "";
    case BondOrder::kDouble: return "=";
    case BondOrder::kTriple: return "#";
    case BondOrder::kAromatic: return both_aromatic ? "" : ":";
  }
  return "";
}

std::string ring_label(int digit) {
  return digit < 10 ? std::string(1, static_cast<char>('0' + digit))
                    : "%" + std::to_string(digit);
}

// Writes one connected graph as SMILES given a total order on its atoms:
// depth-first from the lowest-ranked atom, children in rank order, the last
// child continuing the main chain.
class Writer {
 public:
  Writer(const MolecularGraph &g, const Ranks &ranks)
      : g_(g), ranks_(ranks), order_(g.atom_count(), kUnvisited),
        children_(g.atom_count()), openings_(g.atom_count()),
        closings_(g.atom_count()) { }

  std::string run() {
    if (g_.empty()) return {};
    std::size_t start = 0;
    for (std::size_t i = 1; i < g_.atom_count(); ++i) {
      if (ranks_[i] < ranks_[start]) start = i;
    }
    std::vector<bool> used(g_.bond_count(), false);
    plan(start, used);
    std::string out;
    emit(start, kNone, out);
    return out;
  }

 private:
  static constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  std::vector<Neighbor> sorted_neighbors(std::size_t u) const {
    auto nbs = g_.neighbors(u);
    std::vector<Neighbor> out(nbs.begin(), nbs.end());
    std::sort(out.begin(), out.end(), [&](const Neighbor &a, const Neighbor &b) {
      return ranks_[a.atom] < ranks_[b.atom];
    });
    return out;
  }

  void plan(std::size_t u, std::vector<bool> &used) {
    order_[u] = next_order_++;
    for (const Neighbor &nb : sorted_neighbors(u)) {
      if (used[nb.bond]) continue;
      used[nb.bond] = true;
      if (order_[nb.atom] == kUnvisited) {
        children_[u].push_back(nb);
        plan(nb.atom, used);
      } else {
        // Back edge: the earlier atom opens the ring, u closes it.
        openings_[nb.atom].push_back({u, nb.bond});
        closings_[u].push_back({nb.atom, nb.bond});
      }
    }
  }

  int allocate_digit() {
    int d = 1;
    while (std::find(in_use_.begin(), in_use_.end(), d) != in_use_.end()) ++d;
    in_use_.push_back(d);
    return d;
  }

  void emit(std::size_t u, std::size_t via_bond, std::string &out) {
    if (via_bond != kNone) out += bond_text(g_, via_bond, g_.bond(via_bond).other(u));
    out += atom_text(g_, u);
    // Closings first (rings opened earlier), ordered by when their partner
    // was written; then openings ordered by their closing atom's position.
    auto closings = closings_[u];
    std::sort(closings.begin(), closings.end(),
              [&](const Neighbor &a, const Neighbor &b) {
                return order_[a.atom] < order_[b.atom];
              });
    for (const Neighbor &c : closings) {
      const int d = digit_of_bond_[c.bond];
      out += ring_label(d);
      in_use_.erase(std::find(in_use_.begin(), in_use_.end(), d));
    }
    auto openings = openings_[u];
    std::sort(openings.begin(), openings.end(),
              [&](const Neighbor &a, const Neighbor &b) {
                return order_[a.atom] < order_[b.atom];
              });
    for (const Neighbor &o : openings) {
      const int d = allocate_digit();
      digit_of_bond_[o.bond] = d;
      out += bond_text(g_, o.bond, u);
      out += ring_label(d);
    }
    const auto &kids = children_[u];
    for (std::size_t k = 0; k < kids.size(); ++k) {
      const bool branch = k + 1 < kids.size();
      if (branch) out += '(';
      emit(kids[k].atom, kids[k].bond, out);
      if (branch) out += ')';
    }
  }

  const MolecularGraph &g_;
  const Ranks &ranks_;
  std::vector<std::size_t> order_;
  std::size_t next_order_ = 0;
  std::vector<std::vector<Neighbor>> children_;
  std::vector<std::vector<Neighbor>> openings_;
  std::vector<std::vector<Neighbor>> closings_;
  std::vector<int> in_use_;
  std::map<std::size_t, int> digit_of_bond_;
};

struct Search {
  const MolecularGraph &g;
  std::size_t leaves = 0;
  std::optional<std::string> best;
  Ranks best_ranks;

  void run(Ranks ranks) {
    ranks = refine(g, std::move(ranks));
    const std::size_t n = g.atom_count();
    // Lowest-ranked class with more than one member.
    std::optional<std::size_t> tied_rank;
    std::vector<std::size_t> count(n, 0);
    for (std::size_t r : ranks) ++count[r];
    for (std::size_t r = 0; r < n; ++r) {
      if (count[r] > 1) {
        tied_rank = r;
        break;
      }
    }
    if (!tied_rank) {
      ++leaves;
      std::string s = Writer(g, ranks).run();
      if (!best || s < *best) {
        best = std::move(s);
        best_ranks = ranks;
      }
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (ranks[i] != *tied_rank) continue;
      if (best && leaves >= kMaxLeaves) return;
      // Individualize atom i: it keeps the class rank, its peers move up.
      Ranks split = ranks;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i && ranks[j] == *tied_rank) split[j] = *tied_rank + 1;
      }
      run(std::move(split));
    }
  }
};

Search canonical_search(const MolecularGraph &g) {
  std::vector<SeedInvariant> seeds;
  seeds.reserve(g.atom_count());
  for (std::size_t i = 0; i < g.atom_count(); ++i) {
    const Atom &a = g.atom(i);
    seeds.push_back({atomic_number(a.element), g.degree(i), a.charge,
                     a.aromatic, total_hydrogens(g, i)});
  }
  Search search{g, 0, std::nullopt, {}};
  search.run(rank_by(seeds));
  return search;
}

}  // namespace

std::vector<std::size_t> canonical_ranks(const MolecularGraph &g) {
  if (g.empty()) return {};
  return canonical_search(g).best_ranks;
}

std::string canonicalize(const MolecularGraph &g) {
  std::vector<std::string> parts;
  for (const MolecularGraph &part : components(g)) {
    parts.push_back(*canonical_search(part).best);
  }
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += '.';
    out += parts[i];
  }
  return out;
}

std::string canonical_smiles(std::string_view smiles) {
  const MolecularGraph g = parse(smiles);
  require_valid_valence(g);
  return canonicalize(g);
}

}  // namespace smited::chem
