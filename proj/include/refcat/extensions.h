#pragma once

#include "refcat/fuzzy.h"
#include "refcat/io.h"
#include "refcat/mapreduce.h"
#include "refcat/records.h"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace refcat::ext {

// Edge types beyond paper-to-paper: inbound Wikipedia-article edges and
// outbound Open Library (book) edges. Both reuse the identifier join and the
// slug-candidate/verify machinery, then pass through the same fusion dedup
// as core edges (among themselves, keyed by edge_key).

inline constexpr const char* kEdgeTypeDoiDoi = "doi-doi";
inline constexpr const char* kEdgeTypeOpenLibrary = "target-open-library";
inline constexpr const char* kEdgeTypeWikipedia = "source-wikipedia";
inline constexpr const char* kEdgeTypeUrl = "target-url";

// "wikipedia:Article_Title" (spaces become underscores, as in wiki URLs).
std::string wikipedia_ident(std::string_view article_title);

struct WikiStats {
    uint64_t rows = 0;
    uint64_t skipped = 0; // no title and no usable identifier
    uint64_t raw_pairs = 0;
    uint64_t fused_edges = 0;
};

// rows: canonical WikipediaRow NDJSON; releases: canonical ReleaseRecord
// NDJSON. Emits fused source-wikipedia edges. Rows match by DOI/PMID when
// present, otherwise by slug candidates + verify; exact/strong only.
WikiStats match_wikipedia(LineSource& rows, LineSource& releases, LineSink& fused_out,
                          const mr::SortSpec& spec, const fuzzy::VerifyConfig& config,
                          uint64_t group_cap);

struct OpenLibraryEdition {
    ReleaseRecord record;            // ident = "openlibrary:OL...M"
    std::vector<std::string> isbn13; // all normalized ISBNs of the edition
};

// Editions come as NDJSON with isbn_13, key, title, authors fields.
std::optional<OpenLibraryEdition> parse_openlibrary_edition(std::string_view line);

struct OpenLibStats {
    uint64_t refs = 0;
    uint64_t editions = 0;
    uint64_t rejected_editions = 0;
    uint64_t raw_pairs = 0;   // verified (ref, edition) pairs before fusion
    uint64_t fused_edges = 0; // one edge per edge_key after fusion
};

// refs: canonical RawReference NDJSON. ISBN exact join plus slug fuzzy for
// identifier-less refs; emits fused target-open-library edges.
OpenLibStats match_openlibrary(LineSource& refs, LineSource& editions, LineSink& fused_out,
                               const mr::SortSpec& spec, const fuzzy::VerifyConfig& config,
                               uint64_t group_cap);

struct EdgeTypeCounts {
    uint64_t doi_doi = 0;             // core edges with DOIs on both ends
    uint64_t other_matched = 0;       // core matched edges lacking a DOI side
    uint64_t target_open_library = 0;
    uint64_t source_wikipedia = 0;
    uint64_t target_url = 0; // reserved; URL targets are not derived yet
    uint64_t total = 0;
};

// Classifies the final edge files into the edge-type table. Core bref edges
// are joined against the catalog (twice, via the engine) to test DOI
// presence on both endpoints.
EdgeTypeCounts edge_type_report(LineSource& core_bref, LineSource& releases, LineSource* wiki,
                                LineSource* openlibrary, const mr::SortSpec& spec);

void write_edge_type_tsv(const EdgeTypeCounts& counts, LineSink& out);

} // namespace refcat::ext
