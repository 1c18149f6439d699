//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_SMILES_H_
#define SMITED_SMILES_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "smited/error.h"

namespace smited::chem {

enum class BondOrder : std::uint8_t {
  kSingle = 1,
  kDouble = 2,
  kTriple = 3,
  kAromatic = 4,
};

struct Atom {
  std::string element;  // Title-case symbol, e.g. "C", "Cl", "Se".
  int charge = 0;
  bool aromatic = false;
  // Hydrogen count written inside brackets; unset for organic-subset atoms.
  std::optional<int> explicit_h;
  bool bracket = false;
  // Carried through round-trips, ignored by ranking and fingerprints.
  int isotope = 0;
  std::string chirality;
  int atom_class = 0;
};

struct Bond {
  std::size_t begin = 0;
  std::size_t end = 0;
  BondOrder order = BondOrder::kSingle;
  // '/' or '\\' as written from begin to end; 0 when absent.
  char direction = 0;

  std::size_t other(std::size_t atom) const {
    return atom == begin ? end : begin;
  }
};

struct Neighbor {
  std::size_t atom;
  std::size_t bond;
};

// Atoms plus bonds. Disconnected components ("." in SMILES) live in one
// graph; components() splits them.
class MolecularGraph {
 public:
  std::size_t add_atom(Atom atom);
  // Throws DataError("InvalidBond") for self-loops, out-of-range endpoints
  // and duplicate bonds.
  std::size_t add_bond(std::size_t a, std::size_t b, BondOrder order,
                       char direction = 0);

  std::size_t atom_count() const noexcept { return atoms_.size(); }
  std::size_t bond_count() const noexcept { return bonds_.size(); }
  bool empty() const noexcept { return atoms_.empty(); }

  const Atom &atom(std::size_t i) const { return atoms_[i]; }
  Atom &atom(std::size_t i) { return atoms_[i]; }
  const Bond &bond(std::size_t i) const { return bonds_[i]; }
  std::span<const Atom> atoms() const noexcept { return atoms_; }
  std::span<const Bond> bonds() const noexcept { return bonds_; }
  std::span<const Neighbor> neighbors(std::size_t i) const {
    return adjacency_[i];
  }
  std::size_t degree(std::size_t i) const { return adjacency_[i].size(); }
  std::optional<std::size_t> bond_between(std::size_t a, std::size_t b) const;

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

// Parse failure with the byte offset where it was detected. Kinds:
// EmptyInput, UnbalancedParenthesis, UnclosedRingBond, UnknownElement,
// MalformedBracketAtom, UnexpectedCharacter, InvalidBond.
class SmilesError : public DataError {
 public:
  SmilesError(std::string kind, std::size_t offset, const std::string &detail);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

MolecularGraph parse(std::string_view smiles);

// Atomic number for a title-case symbol, or 0 when unknown.
int atomic_number(std::string_view symbol);
bool is_organic_subset(std::string_view symbol);

struct ValenceReport {
  std::optional<std::size_t> violating_atom;
  bool valid() const noexcept { return !violating_atom.has_value(); }
};

// Organic-subset atoms must fit a standard valence; bracket atoms are
// accepted as written.
ValenceReport check_valence(const MolecularGraph &g);
// Throws DataError("ValenceViolation") naming the first offending atom.
void require_valid_valence(const MolecularGraph &g);

// Implicit hydrogens of an organic-subset atom, 0 for bracket atoms or when
// no standard valence fits.
int implicit_hydrogens(const MolecularGraph &g, std::size_t atom);
// Whether the organic-subset valence table admits atom `atom` as bonded.
bool fits_standard_valence(const MolecularGraph &g, std::size_t atom);
int total_hydrogens(const MolecularGraph &g, std::size_t atom);

std::vector<MolecularGraph> components(const MolecularGraph &g);

// Graph with atom `i` moved to position new_index[i]. Bonds keep their
// list order with endpoints remapped.
MolecularGraph renumber(const MolecularGraph &g,
                        std::span<const std::size_t> new_index);

// Canonical SMILES: identical for graphs equal up to atom renumbering.
// Components are canonicalized separately, sorted, and joined with '.'.
std::string canonicalize(const MolecularGraph &g);
// parse + valence check + canonicalize.
std::string canonical_smiles(std::string_view smiles);

// Canonical atom ranks of one connected graph (0 = written first).
std::vector<std::size_t> canonical_ranks(const MolecularGraph &g);

inline constexpr std::size_t kDefaultFingerprintWidth = 2048;
inline constexpr std::size_t kFingerprintMaxPathBonds = 7;

class Fingerprint {
 public:
  explicit Fingerprint(std::size_t width = kDefaultFingerprintWidth);

  std::size_t width() const noexcept { return width_; }
  void set(std::size_t bit);
  bool test(std::size_t bit) const;
  std::size_t count() const;
  std::vector<std::size_t> on_bits() const;
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  bool operator==(const Fingerprint &other) const = default;

 private:
  std::size_t width_;
  std::vector<std::uint64_t> words_;
};

std::uint64_t fnv1a64(std::string_view bytes);

// Hashed linear paths of 0..7 bonds, each labeled by element/bond-order
// strings read in the lexicographically smaller direction.
Fingerprint fingerprint(const MolecularGraph &g,
                        std::size_t width = kDefaultFingerprintWidth);
std::vector<std::string> path_labels(const MolecularGraph &g);

// |a & b| / |a | b|; 1.0 when both are empty. Throws WidthMismatch.
double tanimoto(const Fingerprint &a, const Fingerprint &b);

// Bemis-Murcko style pruning: repeatedly removes non-ring atoms of
// degree <= 1. Acyclic inputs give an empty graph.
MolecularGraph scaffold(const MolecularGraph &g);
// Per-atom ring membership (atom lies on at least one cycle).
std::vector<bool> ring_atoms(const MolecularGraph &g);

}  // namespace smited::chem

#endif  // SMITED_SMILES_H_
