#pragma once

#include "refcat/records.h"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace refcat::synth {

// Deterministic synthetic corpora for tests and benchmarks. All draws go
// through modulo arithmetic on mt19937_64 so outputs match across standard
// library implementations.

class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t u64(uint64_t bound) { return bound == 0 ? 0 : eng_() % bound; }
    int irange(int lo, int hi) { return lo + static_cast<int>(u64(static_cast<uint64_t>(hi - lo + 1))); }
    bool chance(double p) { return static_cast<double>(eng_() >> 11) / 9007199254740992.0 < p; }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[u64(v.size())];
    }

private:
    std::mt19937_64 eng_;
};

struct CorpusSpec {
    int releases = 10000;
    int refs = 50000;
    uint64_t seed = 42;
    // Field coverage for references mirrors heterogeneous aggregator output:
    // many partial combinations, a slice with no identifier at all.
    double ref_has_doi = 0.55;
    double ref_has_pmid = 0.20;
    double ref_has_arxiv = 0.08;
    double ref_has_isbn = 0.04;
    double ref_title_only = 0.25; // relative share routed to fuzzy matching
    double ref_unmatched = 0.15;  // references that resolve to nothing
};

struct Corpus {
    std::vector<ReleaseRecord> releases;
    std::vector<RawReference> refs;
};

Corpus make_corpus(const CorpusSpec& spec);

// NDJSON files of the corpus (one record per line, canonical shape).
void write_corpus(const Corpus& corpus, const std::filesystem::path& releases_path,
                  const std::filesystem::path& refs_path);

// Random keyed TSV lines (`key <TAB> payload`) for sort/group testing.
std::vector<std::string> random_keyed_lines(uint64_t seed, size_t count, size_t key_space);

// A human-shaped title/author pool used by make_corpus; exposed for tests
// that want plausible single records.
std::string random_title(Rng& rng);
std::vector<std::string> random_authors(Rng& rng, int max_authors);

} // namespace refcat::synth
