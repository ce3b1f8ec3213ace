#pragma once

#include "refcat/mapreduce.h"
#include "refcat/records.h"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace refcat {

// Fusion of exact edges, fuzzy edges and unmatched placeholders into one
// row per edge_key. Selection order: match_status (exact > strong), then
// match_reason precedence, then the lexicographically smallest target_ident
// so reruns are byte-identical.

// Lower rank wins. Identifier schemes come first (doi > pmid > pmcid >
// arxiv > isbn), then the verification reasons in rule order. Unknown
// reasons sort last.
int reason_rank(std::string_view reason);

// Picks the winning edge out of all candidates for one edge_key. `group`
// must be non-empty; when it holds only an unmatched placeholder, that
// placeholder is the result.
BiblioRef fuse_group(const std::vector<BiblioRef>& group);

// Engine reducer: group lines are bref JSON payloads keyed by edge_key.
mr::Reducer make_fuse_reducer();

// The unmatched placeholder every reference contributes to fusion.
BiblioRef unmatched_placeholder(const RawReference& r);

// Match accounting: (provenance, status, reason) counts over a final bref
// stream, sorted by count descending (ties: provenance, status, reason).
struct StatsRow {
    std::string provenance;
    std::string status;
    std::string reason; // "-" for unmatched rows
    uint64_t count = 0;

    bool operator==(const StatsRow&) const = default;
};

std::vector<StatsRow> match_stats(LineSource& bref_lines);
void write_stats_tsv(const std::vector<StatsRow>& rows, LineSink& out);

} // namespace refcat
