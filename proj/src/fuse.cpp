#include "refcat/fuse.h"

#include "refcat/tsv.h"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace refcat {

int reason_rank(std::string_view reason) {
    static constexpr std::string_view kOrder[] = {
        // identifier schemes
        "doi", "pmid", "pmcid", "arxiv", "isbn",
        // verification rules, cascade order
        "titleauthormatch", "versioneddoi", "arxivversion", "pmiddoipair",
        "dataciterelatedid", "jaccardauthors", "tokenizedauthors", "slugtitleauthormatch",
    };
    for (size_t i = 0; i < std::size(kOrder); ++i)
        if (reason == kOrder[i]) return static_cast<int>(i);
    return static_cast<int>(std::size(kOrder));
}

namespace {

int status_rank(BrefStatus s) {
    switch (s) {
    case BrefStatus::Exact: return 0;
    case BrefStatus::Strong: return 1;
    case BrefStatus::Unmatched: return 2;
    }
    return 2;
}

bool better(const BiblioRef& a, const BiblioRef& b) {
    if (int d = status_rank(a.match_status) - status_rank(b.match_status); d != 0) return d < 0;
    if (int d = reason_rank(a.match_reason) - reason_rank(b.match_reason); d != 0) return d < 0;
    return a.target_ident < b.target_ident;
}

} // namespace

BiblioRef fuse_group(const std::vector<BiblioRef>& group) {
    if (group.empty()) throw std::invalid_argument("fuse_group: empty group");
    const BiblioRef* best = &group.front();
    for (size_t i = 1; i < group.size(); ++i)
        if (better(group[i], *best)) best = &group[i];
    return *best;
}

mr::Reducer make_fuse_reducer() {
    return [](std::string_view key, mr::GroupCursor& group, LineSink& out) {
        (void)key;
        std::vector<BiblioRef> candidates;
        std::string_view rest;
        while (group.next(rest)) {
            candidates.push_back(bref_from_json_line(tsv::unescape(rest)));
        }
        if (candidates.empty()) return;
        out.write(to_json_line(fuse_group(candidates)));
    };
}

BiblioRef unmatched_placeholder(const RawReference& r) {
    BiblioRef b;
    b.source_ident = r.source_ident;
    b.source_year = r.source_year;
    b.source_release_stage = r.source_release_stage;
    b.match_status = BrefStatus::Unmatched;
    b.provenance = r.provenance;
    b.ref_index = r.ref_index;
    return b;
}

std::vector<StatsRow> match_stats(LineSource& bref_lines) {
    std::map<std::tuple<std::string, std::string, std::string>, uint64_t> counts;
    std::string line;
    while (bref_lines.next(line)) {
        if (line.empty()) continue;
        BiblioRef b = bref_from_json_line(line);
        std::string reason = b.match_reason.empty() ? "-" : b.match_reason;
        ++counts[{b.provenance, std::string(to_string(b.match_status)), reason}];
    }
    std::vector<StatsRow> rows;
    rows.reserve(counts.size());
    for (const auto& [key, count] : counts)
        rows.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), count});
    std::sort(rows.begin(), rows.end(), [](const StatsRow& a, const StatsRow& b) {
        if (a.count != b.count) return a.count > b.count;
        if (a.provenance != b.provenance) return a.provenance < b.provenance;
        if (a.status != b.status) return a.status < b.status;
        return a.reason < b.reason;
    });
    return rows;
}

void write_stats_tsv(const std::vector<StatsRow>& rows, LineSink& out) {
    out.write("count\tprovenance\tstatus\treason");
    for (const auto& r : rows) {
        std::string line = std::to_string(r.count);
        line += '\t';
        line += tsv::escape(r.provenance);
        line += '\t';
        line += r.status;
        line += '\t';
        line += tsv::escape(r.reason);
        out.write(line);
    }
}

} // namespace refcat
