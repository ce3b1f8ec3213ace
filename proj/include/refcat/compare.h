#pragma once

#include "refcat/mapreduce.h"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace refcat::compare {

// Set-algebra comparison of two (citing-DOI, cited-DOI) edge datasets via
// sort-merge over the external-sort engine. Identities size = overlap + only
// hold exactly by construction and are re-asserted after the merge.

struct EdgeSetReport {
    uint64_t size_c = 0;
    uint64_t size_r = 0;
    uint64_t overlap = 0;
    uint64_t only_c = 0;
    uint64_t only_r = 0;

    static EdgeSetReport from_sizes(uint64_t size_c, uint64_t size_r, uint64_t overlap);
    bool arithmetic_ok() const;
    bool operator==(const EdgeSetReport&) const = default;
};

struct CsvSpec {
    std::string citing_column = "citing";
    std::string cited_column = "cited";
    char delimiter = ',';
};

struct PrefixFamilyCount {
    std::string prefix;          // e.g. "10.15468"
    uint64_t either_endpoint = 0; // edge counts when citing or cited has it
    uint64_t both_endpoints = 0;  // stricter reading: both sides inside
};

struct CompareResult {
    EdgeSetReport report;
    uint64_t malformed_c = 0;
    uint64_t malformed_r = 0;
    uint64_t duplicates_c = 0;
    uint64_t duplicates_r = 0;
    PrefixFamilyCount family; // only-R edges of the configured prefix family
    std::vector<std::pair<std::string, uint64_t>> top_prefixes; // only-R, either endpoint
};

// Encoding of one edge as a sortable single-line key. citing/cited are
// joined with an 0x1F separator after TSV escaping; decode inverts exactly.
std::string encode_edge(std::string_view citing, std::string_view cited);
bool decode_edge(std::string_view key, std::string& citing, std::string& cited);

// Splits one CSV record (quoted fields supported, no embedded newlines).
std::vector<std::string> split_csv(std::string_view line, char delimiter);

// Reads a CSV of DOI pairs, normalizes both DOIs, drops malformed rows and
// exact duplicates, and writes sorted edge-key lines to `sorted_out`.
struct EdgePrepStats {
    uint64_t edges = 0;
    uint64_t malformed = 0;
    uint64_t duplicates = 0;
};
EdgePrepStats prepare_edge_set(const std::filesystem::path& csv, const CsvSpec& spec,
                               const std::filesystem::path& sorted_out,
                               const mr::SortSpec& sort_spec);

CompareResult compare_edge_sets(const std::filesystem::path& c_csv,
                                const std::filesystem::path& r_csv, const CsvSpec& spec,
                                const mr::SortSpec& sort_spec,
                                const std::string& prefix_family = "",
                                size_t top_n_prefixes = 20);

// DOI registrant prefix ("10.1234/x" -> "10.1234").
std::string_view doi_prefix(std::string_view doi);

void write_report(const CompareResult& result, LineSink& out);

} // namespace refcat::compare
