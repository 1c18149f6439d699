//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/evalsuite.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "smited/error.h"
#include "smited/smiles.h"

namespace smited {
namespace {

constexpr double kPaperR2 = 0.99;
constexpr double kPaperMse = 0.002;
constexpr double kPaperMeanTanimoto = 0.52;

const std::vector<double> &lookup(const EmbeddingTable &table, const std::string &s) {
  const auto it = table.find(s);
  if (it == table.end()) {
    throw DataError("MissingEmbedding", "no embedding for '" + s + "'");
  }
  return it->second;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Parsed, valence-checked molecule or nothing.
std::optional<chem::MolecularGraph> valid_graph(std::string_view smiles) {
  if (smiles.empty()) return std::nullopt;
  try {
    chem::MolecularGraph g = chem::parse(smiles);
    if (!chem::check_valence(g).valid()) return std::nullopt;
    return g;
  } catch (const DataError &) {
    return std::nullopt;
  }
}

}  // namespace

std::string family_member(std::string_view family, std::size_t n) {
  return std::string(n, 'C') + std::string(family.substr(1));
}

FamilyDataset generate_families() {
  FamilyDataset d;
  for (std::string_view f : kFamilies) {
    for (std::size_t n = 1; n <= kFamilyMaxCarbons; ++n) {
      d.molecules.push_back(family_member(f, n));
    }
  }
  for (std::string_view f : kFamilies) {
    for (std::size_t n = 1; n <= 4; ++n) {
      for (std::size_t k = 1; k <= 5; ++k) {
        d.triples.push_back({family_member("CC", n), family_member(f, k),
                             family_member(f, n + k + 1), std::string(f), n, k});
      }
    }
  }
  return d;
}

std::vector<double> LinearProbe::predict(std::span<const double> a,
                                         std::span<const double> b) const {
  std::vector<double> out(b0.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = alpha * a[j] + beta * b[j] + b0[j];
  return out;
}

std::vector<std::size_t> sample_probe_triples(std::span<const FamilyTriple> triples,
                                              std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> picks;
  for (std::string_view f : kFamilies) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < triples.size(); ++i) {
      if (triples[i].family == f) members.push_back(i);
    }
    if (!members.empty()) picks.push_back(members[rng.below(members.size())]);
  }
  return picks;
}

// With B0 free per coordinate, it absorbs the per-coordinate means, so
// alpha and beta solve the 2x2 normal equations of the centered data.
LinearProbe fit_linear_probe(std::span<const FamilyTriple> triples,
                             const EmbeddingTable &embeddings,
                             std::span<const std::size_t> fit) {
  if (fit.empty()) throw NumericalError("DegenerateSystem", "no triples to fit");
  const std::size_t dim = lookup(embeddings, triples[fit[0]].a).size();
  const double m = static_cast<double>(fit.size());
  std::vector<double> ma(dim, 0.0), mb(dim, 0.0), mc(dim, 0.0);
  for (std::size_t t : fit) {
    const auto &a = lookup(embeddings, triples[t].a);
    const auto &b = lookup(embeddings, triples[t].b);
    const auto &c = lookup(embeddings, triples[t].c);
    if (a.size() != dim || b.size() != dim || c.size() != dim) {
      throw_shape_mismatch("fit_linear_probe", Shape{dim}, Shape{c.size()});
    }
    for (std::size_t j = 0; j < dim; ++j) {
      ma[j] += a[j] / m;
      mb[j] += b[j] / m;
      mc[j] += c[j] / m;
    }
  }
  double saa = 0, sab = 0, sbb = 0, sac = 0, sbc = 0;
  for (std::size_t t : fit) {
    const auto &a = lookup(embeddings, triples[t].a);
    const auto &b = lookup(embeddings, triples[t].b);
    const auto &c = lookup(embeddings, triples[t].c);
    for (std::size_t j = 0; j < dim; ++j) {
      const double x = a[j] - ma[j], y = b[j] - mb[j], z = c[j] - mc[j];
      saa += x * x;
      sab += x * y;
      sbb += y * y;
      sac += x * z;
      sbc += y * z;
    }
  }
  const double det = saa * sbb - sab * sab;
  if (!(saa > 0.0 && sbb > 0.0) || det <= 1e-12 * saa * sbb) {
    throw NumericalError("DegenerateSystem",
                         "fit triples do not determine alpha and beta");
  }
  LinearProbe p;
  p.alpha = (sac * sbb - sbc * sab) / det;
  p.beta = (sbc * saa - sac * sab) / det;
  p.b0.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) p.b0[j] = mc[j] - p.alpha * ma[j] - p.beta * mb[j];
  p.fit_triples.assign(fit.begin(), fit.end());

  std::vector<std::size_t> held;
  for (std::size_t t = 0; t < triples.size(); ++t) {
    if (std::find(fit.begin(), fit.end(), t) == fit.end()) held.push_back(t);
  }
  p.held_out = held.size();
  if (held.empty()) return p;
  std::vector<double> mean(dim, 0.0);
  for (std::size_t t : held) {
    const auto &c = lookup(embeddings, triples[t].c);
    for (std::size_t j = 0; j < dim; ++j) mean[j] += c[j] / static_cast<double>(held.size());
  }
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t t : held) {
    const auto &c = lookup(embeddings, triples[t].c);
    const auto pred = p.predict(lookup(embeddings, triples[t].a), lookup(embeddings, triples[t].b));
    for (std::size_t j = 0; j < dim; ++j) {
      ss_res += (c[j] - pred[j]) * (c[j] - pred[j]);
      ss_tot += (c[j] - mean[j]) * (c[j] - mean[j]);
    }
  }
  p.mse = ss_res / static_cast<double>(held.size() * dim);
  p.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return p;
}

double decoded_similarity(std::string_view decoded, std::string_view expected) {
  const auto d = valid_graph(decoded);
  if (!d) return 0.0;
  return chem::tanimoto(chem::fingerprint(*d), chem::fingerprint(chem::parse(expected)));
}

FewshotReport fewshot_arithmetic(const Model &model, const LinearProbe &probe,
                                 std::span<const FamilyTriple> triples,
                                 std::span<const std::size_t> which,
                                 const EmbeddingTable &embeddings) {
  FewshotReport r;
  double total = 0.0;
  for (std::size_t t : which) {
    const FamilyTriple &tr = triples[t];
    const auto z = probe.predict(lookup(embeddings, tr.a), lookup(embeddings, tr.b));
    FewshotRecord rec{tr.a, tr.b, tr.c, greedy_decode(model, Tensor({1, z.size()}, z)), 0.0};
    rec.tanimoto = decoded_similarity(rec.decoded, rec.expected);
    total += rec.tanimoto;
    if (r.records.empty()) {
      r.best_tanimoto = r.worst_tanimoto = rec.tanimoto;
    } else {
      r.best_tanimoto = std::max(r.best_tanimoto, rec.tanimoto);
      r.worst_tanimoto = std::min(r.worst_tanimoto, rec.tanimoto);
    }
    r.records.push_back(std::move(rec));
  }
  if (!r.records.empty()) r.mean_tanimoto = total / static_cast<double>(r.records.size());
  return r;
}

LatentEvalReport evaluate_latent(const Model &model, EmbedMode mode,
                                 std::uint64_t seed) {
  const FamilyDataset data = generate_families();
  EmbeddingTable table;
  for (const std::string &s : data.molecules) {
    const Tensor e = embed(model, s, mode);
    table.emplace(s, std::vector<double>(e.data().begin(), e.data().end()));
  }
  LatentEvalReport report;
  report.mode = mode;
  const auto fit = sample_probe_triples(data.triples, seed);
  report.probe = fit_linear_probe(data.triples, table, fit);
  std::vector<std::size_t> held;
  for (std::size_t t = 0; t < data.triples.size(); ++t) {
    if (std::find(fit.begin(), fit.end(), t) == fit.end()) held.push_back(t);
  }
  report.fewshot = fewshot_arithmetic(model, report.probe, data.triples, held, table);
  return report;
}

nlohmann::ordered_json to_json(const LatentEvalReport &report) {
  nlohmann::ordered_json j;
  j["mode"] = std::string(embed_mode_name(report.mode));
  j["alpha"] = report.probe.alpha;
  j["beta"] = report.probe.beta;
  j["b0"] = report.probe.b0;
  j["fit_triples"] = report.probe.fit_triples;
  j["held_out_triples"] = report.probe.held_out;
  j["r2"] = report.probe.r2;
  j["mse"] = report.probe.mse;
  j["mean_tanimoto"] = report.fewshot.mean_tanimoto;
  j["best_tanimoto"] = report.fewshot.best_tanimoto;
  j["worst_tanimoto"] = report.fewshot.worst_tanimoto;
  j["reference"] = {{"r2", kPaperR2}, {"mse", kPaperMse}, {"mean_tanimoto", kPaperMeanTanimoto}};
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (const FewshotRecord &r : report.fewshot.records) {
    records.push_back({{"a", r.a}, {"b", r.b}, {"expected", r.expected},
                       {"decoded", r.decoded}, {"tanimoto", r.tanimoto}});
  }
  j["fewshot"] = records;
  return j;
}

GenerationMetrics generation_metrics(std::span<const std::string> generated,
                                     std::span<const std::string> reference) {
  if (generated.empty() || reference.empty()) {
    throw DataError("EmptyInput", "generation metrics need non-empty generated and reference sets");
  }
  GenerationMetrics m;
  m.generated = generated.size();
  std::vector<chem::MolecularGraph> gen;
  for (const std::string &s : generated) {
    if (auto g = valid_graph(s)) gen.push_back(std::move(*g));
  }
  std::vector<chem::MolecularGraph> ref;
  for (const std::string &s : reference) {
    if (auto g = valid_graph(s)) ref.push_back(std::move(*g));
  }
  m.valid = gen.size();
  m.validity = static_cast<double>(gen.size()) / static_cast<double>(generated.size());
  if (gen.empty()) return m;

  std::set<std::string> unique, ref_canon;
  for (const auto &g : gen) unique.insert(chem::canonicalize(g));
  for (const auto &g : ref) ref_canon.insert(chem::canonicalize(g));
  m.uniqueness = static_cast<double>(unique.size()) / static_cast<double>(gen.size());
  std::size_t novel = 0;
  for (const std::string &s : unique) novel += ref_canon.count(s) == 0;
  m.novelty = static_cast<double>(novel) / static_cast<double>(unique.size());

  std::vector<chem::Fingerprint> gfp, rfp;
  for (const auto &g : gen) gfp.push_back(chem::fingerprint(g));
  for (const auto &g : ref) rfp.push_back(chem::fingerprint(g));
  if (!rfp.empty()) {
    double snn = 0.0;
    for (const auto &f : gfp) {
      double best = 0.0;
      for (const auto &r : rfp) best = std::max(best, chem::tanimoto(f, r));
      snn += best;
    }
    m.snn = snn / static_cast<double>(gfp.size());
  }
  // Mean over all ordered pairs, self-pairs included.
  double pair_sum = 0.0;
  for (const auto &a : gfp) {
    for (const auto &b : gfp) pair_sum += chem::tanimoto(a, b);
  }
  m.intdiv = 1.0 - pair_sum / static_cast<double>(gfp.size() * gfp.size());

  std::map<std::string, double> gs, rs;
  for (const auto &g : gen) gs[chem::canonicalize(chem::scaffold(g))] += 1.0;
  for (const auto &g : ref) rs[chem::canonicalize(chem::scaffold(g))] += 1.0;
  double dot = 0.0, ng = 0.0, nr = 0.0;
  for (const auto &[key, v] : gs) {
    ng += v * v;
    const auto it = rs.find(key);
    if (it != rs.end()) dot += v * it->second;
  }
  for (const auto &[key, v] : rs) nr += v * v;
  m.scaf = ng > 0.0 && nr > 0.0 ? dot / std::sqrt(ng * nr) : 0.0;
  return m;
}

nlohmann::ordered_json to_json(const GenerationMetrics &m) {
  return {{"generated", m.generated}, {"valid", m.valid},
          {"validity", m.validity},   {"uniqueness", m.uniqueness},
          {"novelty", m.novelty},     {"snn", m.snn},
          {"scaf", m.scaf},           {"intdiv", m.intdiv}};
}

std::string to_table(const GenerationMetrics &m) {
  std::ostringstream out;
  char buf[64];
  auto row = [&](const char *name, double v) {
    std::snprintf(buf, sizeof(buf), "%-11s %.4f\n", name, v);
    out << buf;
  };
  out << "generated   " << m.generated << "\nvalid       " << m.valid << '\n';
  row("validity", m.validity);
  row("uniqueness", m.uniqueness);
  row("novelty", m.novelty);
  row("snn", m.snn);
  row("scaf", m.scaf);
  row("intdiv", m.intdiv);
  return out.str();
}

void write_embedding_csv(std::ostream &out, std::span<const std::string> smiles,
                         const Tensor &embeddings) {
  if (embeddings.rank() != 2 || embeddings.dim(0) != smiles.size()) {
    throw_shape_mismatch("write_embedding_csv", Shape{smiles.size()}, embeddings.shape());
  }
  out << "smiles";
  for (std::size_t j = 0; j < embeddings.cols(); ++j) out << ",e" << j;
  out << '\n';
  for (std::size_t i = 0; i < smiles.size(); ++i) {
    out << smiles[i];
    for (double v : embeddings.row_span(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace smited
