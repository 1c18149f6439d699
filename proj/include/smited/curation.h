//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_CURATION_H_
#define SMITED_CURATION_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

namespace smited {

struct CurationReport {
  std::size_t input_count = 0;
  std::size_t parse_failures = 0;
  std::size_t valence_failures = 0;
  std::size_t duplicates_removed = 0;
  std::size_t output_count = 0;
  // Unframed token count of each written molecule -> frequency.
  std::map<std::size_t, std::size_t> token_length_histogram;

  bool conserved() const {
    return input_count ==
           output_count + parse_failures + valence_failures + duplicates_removed;
  }

  std::string to_text() const;
  std::string to_json() const;
};

struct CurationOptions {
  std::size_t threads = 1;
  // Lines canonicalized per batch before the ordered dedup stage.
  std::size_t batch_size = 4096;
};

// Reads one SMILES per line (the first whitespace-separated field; blank
// lines count as parse failures), writes one canonical SMILES per valid
// unique molecule in first-seen order. Output is identical for any thread
// count.
CurationReport curate(std::istream &in, std::ostream &out,
                      const CurationOptions &options = {});

// Fraction of molecules whose framed token length (tokens + 2) is below
// `max_tokens`. Throws DataError("EmptyCorpus").
double length_cutoff_analysis(std::istream &corpus, std::size_t max_tokens);

}  // namespace smited

#endif  // SMITED_CURATION_H_
