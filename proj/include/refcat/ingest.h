#pragma once

#include "refcat/io.h"
#include "refcat/records.h"

#include <cstdint>
#include <optional>
#include <string_view>

namespace refcat {

// Lenient, total parsing of newline-delimited JSON from heterogeneous
// aggregator output. Every line is either accepted or rejected; nothing
// aborts the pipeline. Field aliases (documented in docs/FORMATS.md):
//   release: year|release_year; authors as strings or contribs[].raw_name;
//            top-level doi/pmid/... merged into ext_ids; related_ids both as
//            strings and as {relation, doi} objects
//   reference: source_ident|release_ident|work_ident; ref_index|index;
//              provenance|source; biblio.unstructured|raw; biblio.arxiv|
//              arxiv_id; biblio.journal|container_name
//   wikipedia: article_title|page_title; cited|biblio
// Identifiers pass through the normalize module before storage; out-of-range
// years are dropped.

std::optional<ReleaseRecord> parse_release(std::string_view line);
std::optional<RawReference> parse_raw_reference(std::string_view line);
std::optional<WikipediaRow> parse_wikipedia_row(std::string_view line);

struct IngestStats {
    uint64_t accepted = 0;
    uint64_t rejected = 0;
    uint64_t total() const { return accepted + rejected; }
};

// Stream drivers: parse every input line, write canonical JSON lines for
// accepted records. Rejected lines are counted, never fatal. The reference
// driver assigns missing ref_index values by order of appearance within each
// source.
IngestStats ingest_releases(LineSource& in, LineSink& out);
IngestStats ingest_references(LineSource& in, LineSink& out);
IngestStats ingest_wikipedia_rows(LineSource& in, LineSink& out);

} // namespace refcat
