#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace refcat {

enum class ReleaseStage { Published, Preprint, Submitted, Updated, Unknown };

const char* to_string(ReleaseStage s);
ReleaseStage release_stage_from_string(std::string_view s);

// Year sanity window. Values outside [1500, current_year + 2] are treated as
// absent at ingest time.
int max_plausible_year();
inline constexpr int kMinPlausibleYear = 1500;

// A catalogued scholarly work. ext_ids values are stored in normalized form
// (lowercase DOI, 13-digit ISBN, ...). Schemes: doi, pmid, pmcid, arxiv,
// isbn13, openlibrary, wikipedia.
struct ReleaseRecord {
    std::string ident;
    std::string title;
    std::vector<std::string> authors;
    std::optional<int> year;
    std::optional<ReleaseStage> release_stage;
    std::map<std::string, std::string> ext_ids;
    // Related-identifier assertions (e.g. Datacite relatedIdentifiers),
    // normalized DOIs. Feeds the dataciterelatedid verification rule.
    std::vector<std::string> related_dois;
    std::optional<std::string> container_name, volume, issue, pages, publisher;

    bool operator==(const ReleaseRecord&) const = default;
};

// Partial bibliographic fields of one extracted/declared citation. Any
// combination may be present; identifiers are stored normalized.
struct RefBiblio {
    std::optional<std::string> unstructured, title;
    std::vector<std::string> authors;
    std::optional<int> year;
    std::optional<std::string> doi, pmid, pmcid, arxiv, isbn;
    std::optional<std::string> url, container_name, volume, pages;

    bool empty() const;
    bool operator==(const RefBiblio&) const = default;
};

struct RawReference {
    std::string source_ident;
    int64_t ref_index = -1; // -1: not yet assigned
    std::string provenance;
    RefBiblio biblio;
    // Citing-side metadata, carried through when the input provides it.
    std::optional<int> source_year;
    std::optional<ReleaseStage> source_release_stage;

    std::string edge_key() const;
    bool operator==(const RawReference&) const = default;
};

struct WikipediaRow {
    std::string article_title;
    RefBiblio cited;

    bool operator==(const WikipediaRow&) const = default;
};

enum class BrefStatus { Exact, Strong, Unmatched };
const char* to_string(BrefStatus s);
BrefStatus bref_status_from_string(std::string_view s);

// One resolved citation edge. target_ident is empty exactly when
// match_status == Unmatched. edge_key = source_ident + "_" + ref_index keys
// fusion: one reference resolves to at most one target in the final output.
struct BiblioRef {
    std::string source_ident;
    std::string target_ident;
    std::optional<int> source_year, target_year;
    std::optional<ReleaseStage> source_release_stage;
    BrefStatus match_status = BrefStatus::Unmatched;
    std::string match_reason; // identifier scheme or verification rule code
    std::string provenance;
    int64_t ref_index = 0;
    // Extension edges carry an explicit type (target-open-library,
    // source-wikipedia, ...); classic release-to-release edges leave it empty.
    std::string edge_type;

    std::string edge_key() const;
    bool operator==(const BiblioRef&) const = default;
};

// Canonical JSON (single line, stable field order).
std::string to_json_line(const ReleaseRecord& r);
std::string to_json_line(const RawReference& r);
std::string to_json_line(const WikipediaRow& r);
std::string to_json_line(const BiblioRef& r);

// Strict decoders for records this toolkit wrote itself; throw on anything
// unexpected. Lenient parsing of third-party input lives in ingest.h.
ReleaseRecord release_from_json_line(std::string_view line);
RawReference raw_reference_from_json_line(std::string_view line);
WikipediaRow wikipedia_row_from_json_line(std::string_view line);
BiblioRef bref_from_json_line(std::string_view line);

} // namespace refcat
