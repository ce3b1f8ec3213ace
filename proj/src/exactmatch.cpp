#include "refcat/exactmatch.h"

#include "refcat/tsv.h"

#include <stdexcept>

namespace refcat {

const char* to_string(DocSide s) {
    return s == DocSide::Ref ? "ref" : "release";
}

std::string KeyedDoc::to_line() const {
    std::string line = tsv::escape(key);
    line += '\t';
    line += to_string(side);
    line += '\t';
    line += tsv::escape(payload);
    return line;
}

std::optional<KeyedDoc> KeyedDoc::from_line(std::string_view line) {
    auto fields = tsv::split_fields(line);
    if (fields.size() != 3) return std::nullopt;
    KeyedDoc doc;
    doc.key = tsv::unescape(fields[0]);
    if (fields[1] == "ref")
        doc.side = DocSide::Ref;
    else if (fields[1] == "release")
        doc.side = DocSide::Release;
    else
        return std::nullopt;
    doc.payload = tsv::unescape(fields[2]);
    return doc;
}

std::vector<KeyedDoc> extract_ref_keys(const RawReference& r) {
    std::vector<KeyedDoc> docs;
    std::string payload = to_json_line(r);
    auto add = [&](const char* scheme, const std::optional<std::string>& value) {
        if (value) docs.push_back({std::string(scheme) + ":" + *value, DocSide::Ref, payload});
    };
    // Biblio identifiers are already normalized at ingest.
    add("doi", r.biblio.doi);
    add("pmid", r.biblio.pmid);
    add("pmcid", r.biblio.pmcid);
    add("arxiv", r.biblio.arxiv);
    add("isbn13", r.biblio.isbn);
    return docs;
}

std::vector<KeyedDoc> extract_release_keys(const ReleaseRecord& r) {
    std::vector<KeyedDoc> docs;
    std::string payload = to_json_line(r);
    for (const char* scheme : {"doi", "pmid", "pmcid", "arxiv", "isbn13"}) {
        auto it = r.ext_ids.find(scheme);
        if (it == r.ext_ids.end() || it->second.empty()) continue;
        docs.push_back({std::string(scheme) + ":" + it->second, DocSide::Release, payload});
    }
    return docs;
}

std::string_view key_scheme(std::string_view key) {
    auto colon = key.find(':');
    return colon == std::string_view::npos ? key : key.substr(0, colon);
}

void join_exact_group(std::string_view key, mr::GroupCursor& group, LineSink& bref_out,
                      JoinStats& stats, uint64_t group_cap) {
    std::vector<RawReference> refs;
    std::vector<ReleaseRecord> releases;
    uint64_t docs = 0;
    std::string_view rest;
    while (group.next(rest)) {
        if (++docs > group_cap) {
            // Hot key: drain and skip the whole group.
            while (group.next(rest)) {
            }
            ++stats.hot_groups;
            return;
        }
        auto fields = tsv::split_fields(rest);
        if (fields.size() != 2) continue;
        std::string payload = tsv::unescape(fields[1]);
        if (fields[0] == "ref")
            refs.push_back(raw_reference_from_json_line(payload));
        else if (fields[0] == "release")
            releases.push_back(release_from_json_line(payload));
    }
    if (refs.empty() || releases.empty()) return;

    // Join keys use the ext_ids scheme name; the reported reason uses the
    // shorter "isbn" spelling.
    std::string reason(key_scheme(key));
    if (reason == "isbn13") reason = "isbn";
    for (const auto& ref : refs) {
        for (const auto& rel : releases) {
            if (ref.source_ident == rel.ident) {
                ++stats.self_citations_dropped;
                continue;
            }
            BiblioRef edge;
            edge.source_ident = ref.source_ident;
            edge.target_ident = rel.ident;
            edge.source_year = ref.source_year;
            edge.target_year = rel.year;
            edge.source_release_stage = ref.source_release_stage;
            edge.match_status = BrefStatus::Exact;
            edge.match_reason = reason;
            edge.provenance = ref.provenance;
            edge.ref_index = ref.ref_index;
            bref_out.write(to_json_line(edge));
            ++stats.edges;
        }
    }
}

mr::Reducer make_exact_join_reducer(JoinStats& stats, uint64_t group_cap) {
    return [&stats, group_cap](std::string_view key, mr::GroupCursor& group, LineSink& out) {
        join_exact_group(key, group, out, stats, group_cap);
    };
}

} // namespace refcat
